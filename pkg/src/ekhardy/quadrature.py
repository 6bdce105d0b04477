"""Endpoint-graded quadrature of kernel products on (0, 1).

Integrals ``int_0^1 H(u) g(u) du`` are split into pieces.  On the first
and last piece a power substitution ``u = p v^q`` (resp. ``1 - u =
(1 - p) v^q``) with ``q = 4 / (alpha + 1)`` turns an endpoint behaviour
``u^alpha`` into ``v^3``, which Gauss-Kronrod handles at full order.
Points near 1 are passed to the kernel as complements so that they never
round to 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad_vec

from .errors import DivergenceError, DomainError, QuadratureError

TINY_U = 1e-290


@dataclass(frozen=True)
class QuadratureOptions:
    """Tolerances for the adaptive integrals.

    Attributes
    ----------
    rel_tol, abs_tol : float
        Passed to :func:`scipy.integrate.quad_vec` (max norm over the grid).
    max_subdivisions : int
        Interval budget per piece.
    endpoint_exponent_hints : (float, float), optional
        Overrides the kernel exponents ``(rho*, mu - 1)`` used to grade
        the substitution at 0 and 1.
    """

    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_subdivisions: int = 2000
    endpoint_exponent_hints: tuple | None = None

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be positive")


DEFAULT_QUAD = QuadratureOptions()


def grading_power(alpha: float) -> float:
    """Substitution power for an integrand ``~ t^alpha`` at an endpoint."""
    if not alpha > -1.0:
        raise DivergenceError(f"integrand ~ t^{alpha:.6g} is not integrable at the endpoint")
    if math.isinf(alpha):
        return 1.0
    return max(1.0, 4.0 / (alpha + 1.0))


def _run(fun, opts: QuadratureOptions, what: str):
    res, err, info = quad_vec(fun, 0.0, 1.0, epsabs=opts.abs_tol, epsrel=opts.rel_tol,
                              norm="max", limit=opts.max_subdivisions, full_output=True)
    if info.status != 0 or not np.all(np.isfinite(res)):
        raise QuadratureError(f"{what}: {info.message} (error estimate {err:.3g})")
    return np.asarray(res, dtype=float), float(err)


def kernel_integral(kernel, g: Callable, alpha0: float, alpha1: float,
                    opts: QuadratureOptions = DEFAULT_QUAD, *, breakpoints: Sequence[float] = (),
                    absolute: bool = False, what: str = "kernel integral"):
    """Compute ``int_0^1 H(u) g(u) du`` with graded endpoint substitutions.

    Parameters
    ----------
    kernel : HKernel
        Evaluator; ``kernel.evaluate(u)`` and ``kernel.evaluate(zeta=1-u)``.
    g : callable
        ``g(u)`` returning a float or an array (vectorised over some
        external grid).
    alpha0, alpha1 : float
        Exponents of the full integrand at 0 and at 1.
    breakpoints : sequence of float
        Interior points where the integrand has kinks (e.g. sign changes
        of the kernel when ``absolute`` is set).
    absolute : bool
        Integrate ``|H(u)| g(u)`` instead.

    Returns
    -------
    (value, error) : (ndarray or float, float)
    """
    if kernel.radius < 1.0:
        raise DomainError(
            f"kernel radius {kernel.radius:.6g} < 1: kernel undefined on part of (0, 1)")
    q0 = grading_power(alpha0)
    q1 = grading_power(alpha1)
    cuts = sorted({0.5, *[float(b) for b in breakpoints if 0.0 < b < 1.0]})
    singular_one = kernel.radius == 1.0

    def hval(u=None, zeta=None):
        if zeta is not None:
            v = kernel.evaluate(zeta=zeta).value if singular_one else kernel.evaluate(1.0 - zeta).value
        else:
            v = kernel.evaluate(u).value
        return abs(v) if absolute else v

    total = 0.0
    err = 0.0
    p0 = cuts[0]

    def left(v):
        u = p0 * v ** q0
        if u < TINY_U:
            return 0.0 * g(TINY_U)
        return hval(u) * g(u) * (p0 * q0 * v ** (q0 - 1.0))

    r, e = _run(left, opts, what)
    total = total + r
    err += e
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        width = hi - lo

        def mid(v, lo=lo, width=width):
            u = lo + width * v
            return hval(u) * g(u) * width

        r, e = _run(mid, opts, what)
        total = total + r
        err += e
    p1 = 1.0 - cuts[-1]

    def right(v):
        zeta = p1 * v ** q1
        if zeta <= 0.0:
            return 0.0 * g(1.0)
        return hval(zeta=zeta) * g(1.0 - zeta) * (p1 * q1 * v ** (q1 - 1.0))

    r, e = _run(right, opts, what)
    total = total + r
    err += e
    if np.ndim(total) == 0:
        total = float(total)
    return total, err
