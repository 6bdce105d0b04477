"""Real and complex log-gamma and signed gamma ratios.

The complex logarithm of the gamma function follows the analytic branch
(cut along the negative real axis), which is the convention in which the
recurrence ``log_gamma(z + 1) = log_gamma(z) + log(z)`` holds with the
principal logarithm.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import special

from .errors import PoleError

POLE_TOL = 1e-14
LOG_PI = math.log(math.pi)
HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
# Stirling series coefficients B_{2k} / (2k (2k - 1)), k = 1..10
_STIRLING = np.array([
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
    43867.0 / 244188.0,
    -174611.0 / 125400.0,
])
_STIRLING_MIN = 15.0


def _near_pole(x: float, tol: float = POLE_TOL) -> bool:
    return x <= 0.5 and abs(x - round(x)) <= tol


def _stirling(w):
    """Stirling series for large ``|w|`` in the right half plane."""
    w = np.asarray(w, dtype=complex)
    inv = 1.0 / w
    inv2 = inv * inv
    acc = np.zeros_like(w)
    for c in _STIRLING[::-1]:
        acc = acc * inv2 + c
    return (w - 0.5) * np.log(w) - w + HALF_LOG_2PI + acc * inv


def _loggamma_right(z):
    """Analytic log-gamma for ``Re z >= 0.5`` via upward shift + Stirling."""
    z = np.asarray(z, dtype=complex)
    shift = np.where(np.abs(z.imag) >= _STIRLING_MIN, 0.0,
                     np.maximum(0.0, np.ceil(_STIRLING_MIN - z.real)))
    nmax = int(shift.max()) if shift.size else 0
    corr = np.zeros_like(z)
    for k in range(nmax):
        active = shift > k
        if not active.any():
            break
        corr = corr + np.where(active, np.log(np.where(active, z + k, 1.0)), 0.0)
    return _stirling(z + shift) - corr


def _log_sinpi_upper(z):
    """Continuous branch of ``log(sin(pi z))`` for ``Im z >= 0``."""
    # sin(pi z) = exp(-i pi z) (1 - exp(2 i pi z)) / (2i), |exp(2 i pi z)| <= 1
    e = np.exp(2j * np.pi * z)
    return -1j * np.pi * z + np.log1p(-e) - math.log(2.0) + 0.5j * np.pi


def _loggamma_upper(z):
    """Analytic log-gamma for ``Im z >= 0``."""
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    right = z.real >= 0.5
    if right.any():
        out[right] = _loggamma_right(z[right])
    left = ~right
    if left.any():
        zl = z[left]
        out[left] = LOG_PI - _log_sinpi_upper(zl) - _loggamma_right(1.0 - zl)
    return out


def log_gamma_array(z) -> np.ndarray:
    """Vectorised analytic log-gamma of complex input.

    Poles are not checked; they produce non-finite values.
    """
    z = np.asarray(z, dtype=complex)
    flat = z.ravel()
    lower = np.signbit(flat.imag)
    w = np.where(lower, np.conj(flat), flat)
    out = _loggamma_upper(w)
    out = np.where(lower, np.conj(out), out)
    return out.reshape(z.shape)


def log_gamma(z) -> complex:
    """Logarithm of the gamma function on the analytic branch.

    Parameters
    ----------
    z : complex
        Argument. Non-positive integers (to within ``1e-14``) are poles.

    Returns
    -------
    complex
        ``log Gamma(z)``; for real positive ``z`` the imaginary part is 0.

    Raises
    ------
    PoleError
        If ``z`` is numerically a non-positive integer.
    """
    z = complex(z)
    if abs(z.imag) <= POLE_TOL and _near_pole(z.real):
        raise PoleError(f"log_gamma pole at z={z!r}")
    if z.imag == 0.0 and z.real > 0:
        return complex(float(special.gammaln(z.real)), z.imag)
    return complex(log_gamma_array(np.array([z]))[0])


def real_log_gamma(x: float) -> tuple[float, int]:
    """Return ``(log|Gamma(x)|, sign Gamma(x))`` for real ``x``.

    Raises
    ------
    PoleError
        If ``x`` is numerically a non-positive integer.
    """
    x = float(x)
    if _near_pole(x):
        raise PoleError(f"gamma pole at x={x!r}")
    lg = float(special.gammaln(x))
    if x > 0:
        return lg, 1
    return lg, (-1 if math.floor(x) % 2 else 1)


def gammaln_sign(x):
    """Vectorised ``(log|Gamma|, sign)``; sign is 0 on poles."""
    x = np.asarray(x, dtype=float)
    pole = (x <= 0.5) & (np.abs(x - np.round(x)) <= POLE_TOL)
    lg = special.gammaln(np.where(pole, 0.5, x))
    sg = special.gammasgn(np.where(pole, 0.5, x))
    return np.where(pole, np.inf, lg), np.where(pole, 0.0, sg)


@dataclass
class GammaRatioSpec:
    """Ratio ``prod Gamma(numerator) / prod Gamma(denominator)``.

    Attributes
    ----------
    numerator, denominator : sequence of float
        Real gamma arguments.
    """

    numerator: Sequence[float] = field(default_factory=list)
    denominator: Sequence[float] = field(default_factory=list)


def log_gamma_ratio(spec: GammaRatioSpec) -> tuple[float, int]:
    """Signed log of a gamma ratio.

    Returns
    -------
    (float, int)
        ``(log|ratio|, sign)``. A denominator pole gives ``(-inf, 0)``.

    Raises
    ------
    PoleError
        If any numerator argument is a pole.
    """
    total = 0.0
    sign = 1
    for x in spec.numerator:
        lg, s = real_log_gamma(x)
        total += lg
        sign *= s
    zero = False
    for x in spec.denominator:
        if _near_pole(float(x)):
            zero = True
            continue
        lg, s = real_log_gamma(x)
        total -= lg
        sign *= s
    if zero:
        return -math.inf, 0
    return total, sign


def gamma_ratio(spec: GammaRatioSpec) -> float:
    """Evaluate a gamma ratio in log space with sign tracking.

    Overflow returns a signed infinity instead of raising.

    Examples
    --------
    >>> round(gamma_ratio(GammaRatioSpec([2.0], [3.5])), 10)
    0.3009011112
    """
    lg, sign = log_gamma_ratio(spec)
    if sign == 0:
        return 0.0
    if lg > 709.78:
        return math.copysign(math.inf, sign)
    return sign * math.exp(lg)
