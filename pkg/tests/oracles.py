"""Independent reference implementations used by the test-suite.

Nothing here imports the package under test.  Everything is either a
closed form or an mpmath computation at elevated precision.
"""
import math

import mpmath as mp
import numpy as np

# Values computed once with the oracles below (mpmath, 40 digits) and frozen.
LOG_GAMMA_HALF = 0.57236494292470008707        # log Gamma(1/2) = log sqrt(pi)
LOG_GAMMA_3_5 = 1.2009736023470742248          # log Gamma(3.5)
GAMMA_2_OVER_3_5 = 0.30090111122547001971      # Gamma(2)/Gamma(3.5), also the apply_i multiplier
GAMMA_1_5_OVER_2 = 0.88622692545275801365      # k2 / c2 example
C1_EXAMPLE = 4.0 / 15.0                        # Gamma(1.5)/Gamma(3.5)


def g_closed_form(a, b, z):
    """``G^{1,0}_{1,1}[z | a; b] = z^b (1-z)^(a-b-1) / Gamma(a-b)``."""
    return z ** b * (1.0 - z) ** (a - b - 1.0) / math.gamma(a - b)


def meijer_g(a, b, z=None, dps=30, zeta=None):
    """``G^{m,0}_{m,m}`` through mpmath.

    Pass ``zeta = 1 - z`` for points near 1; the float ``1 - zeta`` would
    carry a rounding error far larger than ``zeta`` itself resolves.
    """
    with mp.workdps(dps):
        if zeta is not None:
            z = 1 - mp.mpf(zeta)
        return float(mp.meijerg([[], list(a)], [list(b), []], z))


def h_slope_two(a1, b1, a2, b2, z, dps=30):
    """``H[z | (a1,1),(a2,2); (b1,1),(b2,2)]`` by Gauss multiplication.

    ``Gamma(2s+b)/Gamma(2s+a) = 2^(b-a) Gamma(s+b/2)Gamma(s+b/2+1/2) / (same for a)``,
    so the kernel is ``2^(b2-a2)`` times a three-parameter G function.
    """
    with mp.workdps(dps):
        g = mp.meijerg([[], [a1, a2 / 2, (a2 + 1) / 2]], [[b1, b2 / 2, (b2 + 1) / 2], []], z)
        return float(mp.mpf(2) ** (b2 - a2) * g)


def mellin_multiplier(upper, lower, s, dps=30):
    """``prod Gamma(b + B s) / Gamma(a + A s)`` in mpmath."""
    with mp.workdps(dps):
        num = mp.fprod(mp.gamma(b + B * s) for b, B in lower)
        den = mp.fprod(mp.gamma(a + A * s) for a, A in upper)
        return float(num / den)


def single_ek(beta, gamma, delta, f, x, dps=20):
    """Classical Erdelyi-Kober integral of ``f`` at ``x`` by mpmath quadrature."""
    with mp.workdps(dps):
        k = lambda u: beta * u ** (beta * gamma + beta - 1) * (1 - u ** beta) ** (delta - 1) / mp.gamma(delta)
        return float(mp.quad(lambda u: k(u) * f(x * u), [0, 0.5, 1]))


def i_multiplier(gamma, delta, beta, lam, p):
    """``prod Gamma(gamma+1+p/lambda) / Gamma(gamma+delta+1+p/beta)`` via mpmath."""
    out = mp.mpf(1)
    for g, d, b, l in zip(gamma, delta, beta, lam):
        out *= mp.gamma(g + 1 + p / l) / mp.gamma(g + d + 1 + p / b)
    return float(out)


def k_multiplier(tau, alpha, eps, xi, p):
    out = mp.mpf(1)
    for t, a, e, x in zip(tau, alpha, eps, xi):
        out *= mp.gamma(t - p / x) / mp.gamma(t + a - p / e)
    return float(out)


def poisson(t, x):
    return t / (math.pi * (t * t + x * x))


def trapezoid(values, step):
    v = np.asarray(values, dtype=float)
    return step * (v.sum() - 0.5 * (v[0] + v[-1]))
