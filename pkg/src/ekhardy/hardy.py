"""Grid-level Poisson maximal function, H^1 norm and bound checks.

Functions live on a uniform grid and are taken to vanish outside it.
``P_t * f`` is a trapezoid-type rule for the convolution integral,
computed for all grid points at once with an FFT.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass

import numpy as np
from scipy import fft as sfft

from . import functions as _functions
from .errors import DivergenceError, DomainError, SpecError
from .functions import TestFunction
from .grid import Grid, GridFunction
from .operators import (IOperatorSpec, KOperatorSpec, apply_i, apply_k, kernel_norm_k1,
                        kernel_norm_k2)
from .quadrature import DEFAULT_QUAD, QuadratureOptions

INV_PI = 1.0 / math.pi
DEFAULT_GRID = Grid(-50.0, 50.0, 0.01)


def _workers() -> int:
    try:
        n = int(os.environ.get("EKH_THREADS", "0"))
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


@dataclass(frozen=True)
class TGrid:
    """Geometric grid of Poisson scales ``t`` for the discretised supremum."""

    t_min: float
    t_max: float
    count: int = 64
    spacing: str = "geometric"

    def __post_init__(self):
        if not (self.t_min > 0 and self.t_max > self.t_min):
            raise SpecError("t-grid needs 0 < t_min < t_max")
        if self.count < 2:
            raise SpecError("t-grid needs at least 2 points")
        if self.spacing != "geometric":
            raise SpecError("only geometric t-grids are supported")

    @property
    def t(self) -> np.ndarray:
        return np.geomspace(self.t_min, self.t_max, self.count)

    def scaled(self, lam: float) -> "TGrid":
        return TGrid(self.t_min * lam, self.t_max * lam, self.count)

    @classmethod
    def parse(cls, text: str) -> "TGrid":
        """Parse ``"tmin,tmax,count"``."""
        try:
            a, b, c = text.split(",")
            return cls(float(a), float(b), int(c))
        except ValueError as exc:
            raise SpecError(f"t-grid must be 'tmin,tmax,count', got {text!r}") from exc

    @classmethod
    def default_for(cls, grid) -> "TGrid":
        """64 points on ``[step, 10 * max|x|]``."""
        return cls(grid.step, 10.0 * max(abs(grid.x_min), abs(grid.x_max)), 64)


# ---------------------------------------------------------------- Poisson


def poisson_kernel(t: float, x):
    """``P_t(x) = t^-1 P(x/t)`` with ``P(x) = 1 / (pi (1 + x^2))``.

    Written as ``(1/pi)/t`` divided by ``1 + (x/t)^2 >= 1`` so that the
    bound ``P_t(x) <= (1/pi)/t`` also holds in floating point.
    """
    if not t > 0:
        raise DomainError("Poisson scale t must be positive")
    with np.errstate(over="ignore"):
        r = np.asarray(x, dtype=float) / t
        out = (INV_PI / t) / (1.0 + r * r)
    return float(out) if out.ndim == 0 else out


def poisson_bound(t: float) -> float:
    """Sup-norm bound ``(1/pi)/t`` of ``P_t``."""
    return INV_PI / t


def _trap_weights(n: int, step: float) -> np.ndarray:
    w = np.full(n, step)
    w[0] = w[-1] = 0.5 * step
    return w


# below this multiple of the step, sampled kernels lose accuracy
PRODUCT_RULE_T = 4.0


def _moments(a, b, t):
    """``int_a^b P_t`` and ``int_a^b u P_t(u) du`` in cancellation-free form."""
    m0 = INV_PI * np.arctan2((b - a) * t, t * t + a * b)
    m1 = (0.5 * INV_PI * t) * np.log1p((b - a) * (b + a) / (t * t + a * a))
    return m0, m1


def hat_weights(t: float, step: float, offsets) -> np.ndarray:
    """``int P_t(x - y) phi(y) dy`` for the hat function ``phi`` of width ``step``.

    Convolving the samples with these weights integrates ``P_t`` exactly
    against the piecewise-linear interpolant of ``f``, which stays
    accurate when ``t`` is comparable to or smaller than the step.
    """
    x = np.asarray(offsets, dtype=float)
    h = step
    l0, l1 = _moments(x - h, x, t)
    r0, r1 = _moments(x, x + h, t)
    return (l1 - (x - h) * l0 + (x + h) * r0 - r1) / h


class _Convolver:
    """Caches the FFT of ``f`` for convolutions with several ``P_t``.

    Scales ``t >= 4 step`` use the trapezoid rule with the sampled kernel
    (exponentially accurate for smooth integrands); smaller scales use
    the product rule of :func:`hat_weights`.
    """

    def __init__(self, f: GridFunction):
        self.f = f
        self.n = f.n
        self.size = sfft.next_fast_len(3 * self.n - 2, real=True)
        self.zero = not np.any(f.samples)
        w = _workers()
        self.gf_trap = sfft.rfft(f.samples * _trap_weights(self.n, f.step), self.size, workers=w)
        self.gf_hat = None
        self.offsets = f.step * np.arange(-(self.n - 1), self.n)

    def __call__(self, t: float) -> np.ndarray:
        h = self.f.step
        if t < h / 10.0:
            raise DomainError(
                f"t = {t:.3g} below step/10 = {h / 10:.3g}: kernel unresolved on the grid")
        if self.zero:
            return np.zeros(self.n)
        w = _workers()
        if t >= PRODUCT_RULE_T * h:
            gf = self.gf_trap
            k = poisson_kernel(t, self.offsets)
        else:
            if self.gf_hat is None:
                self.gf_hat = sfft.rfft(self.f.samples, self.size, workers=w)
            gf = self.gf_hat
            k = hat_weights(t, h, self.offsets)
        full = sfft.irfft(gf * sfft.rfft(k, self.size, workers=w), self.size, workers=w)
        return full[self.n - 1:2 * self.n - 1]


def poisson_convolve(f: GridFunction, t: float) -> GridFunction:
    """Trapezoid approximation of ``(P_t * f)(x)`` at the grid points."""
    return f.with_samples(_Convolver(f)(t))


def maximal_function(f: GridFunction, tg: TGrid | None = None) -> GridFunction:
    """``max_{t in tg} |P_t * f|`` pointwise."""
    tg = tg or TGrid.default_for(f)
    conv = _Convolver(f)
    out = np.zeros(f.n)
    for t in tg.t:
        np.maximum(out, np.abs(conv(t)), out=out)
    return f.with_samples(out)


def h1_norm(f: GridFunction, tg: TGrid | None = None) -> float:
    """Trapezoid integral of the grid maximal function."""
    return maximal_function(f, tg).integral()


def dilate(f: GridFunction, lam: float) -> GridFunction:
    """``D_lam f(x) = f(x / lam)`` on the same grid (linear interpolation)."""
    if not lam > 0:
        raise DomainError("dilation factor must be positive")
    return f.with_samples(f(f.x / lam))


def dilation_commutation_check(f: GridFunction, lam: float, tg: TGrid | None = None) -> float:
    """Max discrepancy between ``M_P D_lam f`` and ``D_lam M_P f``.

    ``M_P D_lam f`` uses the t-grid scaled by ``lam``; the comparison is
    restricted to grid points whose preimage ``x / lam`` lies in the grid.
    """
    tg = tg or TGrid.default_for(f)
    if lam == 1.0:
        return 0.0
    left = maximal_function(dilate(f, lam), tg.scaled(lam))
    mf = maximal_function(f, tg)
    right = mf(f.x / lam)
    y = f.x / lam
    keep = (y >= f.x_min) & (y <= f.x_max)
    if not keep.any():
        raise DomainError("dilated grid does not overlap the original")
    return float(np.max(np.abs(left.samples[keep] - right[keep])))


# ---------------------------------------------------------------- atoms


def make_atom(center: float, width: float, grid=DEFAULT_GRID) -> TestFunction:
    """Mean-zero atom normalised on ``grid`` (zero grid mean, unit grid L1 mass)."""
    return _functions.atom(center, width, grid=grid)


def sample(f, grid) -> GridFunction:
    """Sample a test function (or any vectorised callable) on a grid."""
    if isinstance(f, GridFunction):
        return f
    return Grid(grid.x_min, grid.x_max, grid.step).sample(f)


# ---------------------------------------------------------------- bound checks


@dataclass
class BoundCheckReport:
    """Both sides of ``||T f||_{H^1} <= k ||f||_{H^1}`` on a grid.

    ``passed`` is ``None`` when the constant diverges and the inequality
    has no content.  JSON uses the key ``"pass"``.
    """

    lhs: float
    rhs: float
    ratio: float
    constant_used: float
    passed: bool | None
    notes: str = ""
    tolerance: float = 1e-3

    def __post_init__(self):
        for name in ("lhs", "rhs", "ratio", "constant_used", "tolerance"):
            v = getattr(self, name)
            setattr(self, name, math.nan if v is None else float(v))

    def to_json(self) -> dict:
        # non-finite numbers become null so the output stays strict JSON
        d = {k: (None if isinstance(v, float) and not math.isfinite(v) else v)
             for k, v in asdict(self).items()}
        d["pass"] = d.pop("passed")
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, allow_nan=False)

    @classmethod
    def from_json(cls, obj) -> "BoundCheckReport":
        if isinstance(obj, str):
            obj = json.loads(obj)
        d = dict(obj)
        d["passed"] = d.pop("pass")
        return cls(**d)


def _verify(apply, norm, spec, f, grid, tg, opts, what):
    grid = grid or DEFAULT_GRID
    grid = Grid(grid.x_min, grid.x_max, grid.step)
    tg = tg or TGrid.default_for(grid)
    fg = sample(f, grid)
    nf = h1_norm(fg, tg)
    if spec.identity:
        return BoundCheckReport(nf, nf, 1.0, 1.0, True, "identity branch: T f = f")
    try:
        k = norm(spec, opts)
    except (DivergenceError, SpecError) as exc:
        return BoundCheckReport(math.nan, math.inf, math.nan, math.inf, None,
                                f"{what} divergent; theorem inapplicable ({exc})")
    tf = apply(spec, f, grid, opts)
    lhs = h1_norm(tf, tg)
    rhs = k * nf
    ratio = lhs / rhs if rhs > 0 else math.inf
    passed = bool(lhs <= rhs * (1.0 + 1e-3))
    qerr = float(np.max(tf.error_estimates)) if tf.error_estimates is not None else 0.0
    notes = f"{what} = {k:.17g}; max quadrature error {qerr:.3g}"
    return BoundCheckReport(lhs, rhs, ratio, k, passed, notes)


def verify_bound_i(spec: IOperatorSpec, f, grid=None, tg: TGrid | None = None,
                   opts: QuadratureOptions = DEFAULT_QUAD) -> BoundCheckReport:
    """Check ``||I f|| <= k1 ||f||`` with grid H^1 norms."""
    return _verify(apply_i, kernel_norm_k1, spec, f, grid, tg, opts, "k1")


def verify_bound_k(spec: KOperatorSpec, f, grid=None, tg: TGrid | None = None,
                   opts: QuadratureOptions = DEFAULT_QUAD) -> BoundCheckReport:
    """Check ``||K f|| <= k2 ||f||`` with grid H^1 norms."""
    return _verify(apply_k, kernel_norm_k2, spec, f, grid, tg, opts, "k2")
