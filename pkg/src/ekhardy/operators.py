"""Multiple Erdelyi-Kober operators with H^{m,0}_{m,m} kernels.

``I f(x) = int_0^1 H(u) f(xu) du`` with kernel parameters
upper ``(gamma_k + delta_k + 1 - 1/beta_k, 1/beta_k)`` and lower
``(gamma_k + 1 - 1/lambda_k, 1/lambda_k)``;

``K f(x) = int_1^inf H(1/u) f(xu) du = int_0^1 H(v) f(x/v) v^-2 dv`` with
upper ``(tau_k + alpha_k + 1/epsilon_k, 1/epsilon_k)`` and lower
``(tau_k + 1/xi_k, 1/xi_k)``.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, optimize, special

from .errors import DivergenceError, DomainError, SpecError
from .functions import TestFunction
from .gamma import GammaRatioSpec, gamma_ratio
from .grid import GridFunction, PointValues, as_points
from .kernels import GKernelSpec, HKernelSpec, get_kernel, mellin_multiplier
from .quadrature import DEFAULT_QUAD, QuadratureOptions, kernel_integral

COND_TOL = 1e-12


def _tuple(xs, name):
    try:
        out = tuple(float(x) for x in xs)
    except TypeError:
        out = (float(xs),)
    if not all(math.isfinite(x) for x in out):
        raise SpecError(f"{name} must be finite")
    return out


# ---------------------------------------------------------------- specs


@dataclass(frozen=True)
class IOperatorSpec:
    """Parameters ``(gamma_k, delta_k, beta_k, lambda_k)`` of the I operator.

    The JSON form uses the key ``"lambda"``; the attribute is ``lam``.
    """

    gamma: tuple
    delta: tuple
    beta: tuple
    lam: tuple

    def __post_init__(self):
        for name in ("gamma", "delta", "beta", "lam"):
            object.__setattr__(self, name, _tuple(getattr(self, name), name))
        m = len(self.gamma)
        if m < 1 or not (len(self.delta) == len(self.beta) == len(self.lam) == m):
            raise SpecError("gamma, delta, beta, lambda must have the same length >= 1")
        if min(self.beta) <= 0 or min(self.lam) <= 0:
            raise SpecError("beta and lambda must be positive")
        if min(self.delta) < 0:
            raise SpecError("delta must be non-negative")
        if sum(self.delta) == 0 and not self.identity:
            raise SpecError("all delta_k = 0 with lambda != beta is not a defined operator")

    @property
    def m(self) -> int:
        return len(self.gamma)

    @property
    def identity(self) -> bool:
        return all(d == 0 for d in self.delta) and self.beta == self.lam

    @property
    def condition1(self) -> bool:
        return abs(math.fsum(1 / l for l in self.lam) - math.fsum(1 / b for b in self.beta)) <= COND_TOL

    @property
    def condition2(self) -> bool:
        return sum(self.delta) > 0 or self.identity

    @property
    def condition3(self) -> bool:
        return self.rho0 > 0

    @property
    def rho0(self) -> float:
        return min((g + 1) * l for g, l in zip(self.gamma, self.lam)) - 1.0

    @property
    def mu0(self) -> float:
        return math.fsum(self.delta) + math.fsum(1 / l for l in self.lam) - math.fsum(
            1 / b for b in self.beta)

    def to_json(self) -> dict:
        return {"gamma": list(self.gamma), "delta": list(self.delta),
                "beta": list(self.beta), "lambda": list(self.lam)}

    @classmethod
    def from_json(cls, obj) -> "IOperatorSpec":
        if isinstance(obj, str):
            obj = json.loads(obj)
        try:
            return cls(obj["gamma"], obj["delta"], obj["beta"], obj["lambda"])
        except KeyError as exc:
            raise SpecError(f"missing operator field {exc}") from exc


@dataclass(frozen=True)
class KOperatorSpec:
    """Parameters ``(tau_k, alpha_k, epsilon_k, xi_k)`` of the K operator."""

    tau: tuple
    alpha: tuple
    epsilon: tuple
    xi: tuple

    def __post_init__(self):
        for name in ("tau", "alpha", "epsilon", "xi"):
            object.__setattr__(self, name, _tuple(getattr(self, name), name))
        n = len(self.tau)
        if n < 1 or not (len(self.alpha) == len(self.epsilon) == len(self.xi) == n):
            raise SpecError("tau, alpha, epsilon, xi must have the same length >= 1")
        if min(self.epsilon) <= 0 or min(self.xi) <= 0:
            raise SpecError("epsilon and xi must be positive")
        if min(self.alpha) < 0:
            raise SpecError("alpha must be non-negative")
        if sum(self.alpha) == 0 and not self.identity:
            raise SpecError("all alpha_k = 0 with xi != epsilon is not a defined operator")

    @property
    def n(self) -> int:
        return len(self.tau)

    @property
    def identity(self) -> bool:
        return all(a == 0 for a in self.alpha) and self.epsilon == self.xi

    @property
    def condition1(self) -> bool:
        return abs(math.fsum(1 / x for x in self.xi) - math.fsum(1 / e for e in self.epsilon)) <= COND_TOL

    @property
    def condition2(self) -> bool:
        return sum(self.alpha) > 0 or self.identity

    @property
    def condition3(self) -> bool:
        return self.rho1 > 0

    @property
    def rho1(self) -> float:
        return min(t * x for t, x in zip(self.tau, self.xi)) + 1.0

    @property
    def mu1(self) -> float:
        return math.fsum(self.alpha) + math.fsum(1 / e for e in self.epsilon) - math.fsum(
            1 / x for x in self.xi)

    def to_json(self) -> dict:
        return {"tau": list(self.tau), "alpha": list(self.alpha),
                "epsilon": list(self.epsilon), "xi": list(self.xi)}

    @classmethod
    def from_json(cls, obj) -> "KOperatorSpec":
        if isinstance(obj, str):
            obj = json.loads(obj)
        try:
            return cls(obj["tau"], obj["alpha"], obj["epsilon"], obj["xi"])
        except KeyError as exc:
            raise SpecError(f"missing operator field {exc}") from exc


def load_operator_spec(obj):
    """Build an I or K spec from a JSON mapping, deciding by its keys."""
    if "gamma" in obj:
        return IOperatorSpec.from_json(obj)
    if "tau" in obj:
        return KOperatorSpec.from_json(obj)
    raise SpecError("operator spec needs gamma/delta/beta/lambda or tau/alpha/epsilon/xi")


def derive_i_kernel(spec: IOperatorSpec) -> HKernelSpec:
    """Kernel parameters of the I operator (not validated)."""
    upper = tuple((g + d + 1 - 1 / b, 1 / b) for g, d, b in zip(spec.gamma, spec.delta, spec.beta))
    lower = tuple((g + 1 - 1 / l, 1 / l) for g, l in zip(spec.gamma, spec.lam))
    return HKernelSpec(upper, lower)


def derive_k_kernel(spec: KOperatorSpec) -> HKernelSpec:
    """Kernel parameters of the K operator (not validated)."""
    upper = tuple((t + a + 1 / e, 1 / e) for t, a, e in zip(spec.tau, spec.alpha, spec.epsilon))
    lower = tuple((t + 1 / x, 1 / x) for t, x in zip(spec.tau, spec.xi))
    return HKernelSpec(upper, lower)


def _one_exponent(ker) -> float:
    """Integrand exponent at u = 1 contributed by the kernel."""
    return ker.mu - 1.0 if ker.radius == 1.0 else 0.0


def _hints(opts, ker):
    if opts.endpoint_exponent_hints is not None:
        return tuple(float(h) for h in opts.endpoint_exponent_hints)
    return ker.rho_star, _one_exponent(ker)


# ---------------------------------------------------------------- apply


def _finish(xs, values, err, uniform):
    errs = np.full(len(xs), err)
    if uniform is not None:
        x_min, x_max, step = uniform
        return GridFunction(x_min, x_max, step, np.asarray(values, dtype=float), errs)
    return PointValues(np.asarray(xs), np.asarray(values, dtype=float), errs)


def apply_i(spec: IOperatorSpec, f: TestFunction, x_grid, opts: QuadratureOptions = DEFAULT_QUAD):
    """Apply the I operator to ``f`` on a grid.

    Parameters
    ----------
    spec : IOperatorSpec
    f : TestFunction or callable
    x_grid : GridFunction-like, Grid or array of points
    opts : QuadratureOptions

    Returns
    -------
    GridFunction or PointValues
        Values with a (max-norm) quadrature error estimate per point.
    """
    xs, uniform = as_points(x_grid)
    if spec.identity:
        return _finish(xs, np.asarray(f(xs), dtype=float), 0.0, uniform)
    hspec = derive_i_kernel(spec)
    ker = get_kernel(hspec)
    rho, one = _hints(opts, ker)
    e0 = getattr(f, "zero_exponent", 0.0)
    if np.all(xs == 0):
        e0 = 0.0
    alpha0 = rho + e0 if math.isfinite(e0) else max(rho, 0.0)
    vals, err = kernel_integral(ker, lambda u: np.asarray(f(xs * u), dtype=float),
                                alpha0, one, opts, what="apply_i")
    return _finish(xs, vals, err, uniform)


def apply_k(spec: KOperatorSpec, f: TestFunction, x_grid, opts: QuadratureOptions = DEFAULT_QUAD):
    """Apply the K operator to ``f`` on a grid via ``v = 1/u``."""
    xs, uniform = as_points(x_grid)
    if spec.identity:
        return _finish(xs, np.asarray(f(xs), dtype=float), 0.0, uniform)
    hspec = derive_k_kernel(spec)
    ker = get_kernel(hspec)
    rho, one = _hints(opts, ker)
    q = getattr(f, "decay_exponent", 0.0)
    alpha0 = rho - 2.0 - q
    if np.any(xs == 0):
        f0 = float(np.asarray(f(np.array([0.0])))[0])
        if f0 != 0.0:
            alpha0 = min(alpha0, rho - 2.0)
    if not alpha0 > -1.0:
        raise DivergenceError(
            f"K integral diverges: kernel exponent {rho:.6g} against test-function decay {q:.6g}")

    def g(v):
        with np.errstate(divide="ignore", over="ignore"):
            y = xs / v
        return np.asarray(f(y), dtype=float) / (v * v)

    vals, err = kernel_integral(ker, g, alpha0, one, opts, what="apply_k")
    return _finish(xs, vals, err, uniform)


# ---------------------------------------------------------------- norms


def _sign_changes(ker, n: int = 120) -> list:
    """Roots of the kernel in (0, 1) located by sampling + Brent."""
    us = np.concatenate([np.geomspace(1e-10, 0.02, n // 3), np.linspace(0.02, 0.98, n // 3)])
    zs = np.geomspace(0.02, 1e-10, n // 3)
    pts = [(u, None) for u in us] + [(None, z) for z in zs]

    def val(p):
        u, z = p
        return ker.evaluate(u).value if z is None else ker.evaluate(zeta=z).value

    vals = [val(p) for p in pts]
    roots = []
    for (p, vp), (q, vq) in zip(zip(pts, vals), zip(pts[1:], vals[1:])):
        if vp == 0.0 or vq == 0.0 or (vp > 0) == (vq > 0):
            continue
        up = p[0] if p[0] is not None else 1.0 - p[1]
        uq = q[0] if q[0] is not None else 1.0 - q[1]
        roots.append(optimize.brentq(lambda u: ker.evaluate(u).value, up, uq, xtol=1e-15))
    return roots


def _abs_norm(hspec, rho, mu, weight_shift, opts, what):
    """``int_0^1 |H(u)| u^(weight_shift - 1) du`` with sign-change handling."""
    ker = get_kernel(hspec)
    roots = _sign_changes(ker)
    alpha0 = rho + weight_shift - 1.0
    value, err = kernel_integral(
        ker, lambda u: u ** (weight_shift - 1.0),
        alpha0, _one_exponent(ker), opts, breakpoints=roots, absolute=True, what=what)
    if not roots and ker.radius == 1.0:
        closed = abs(mellin_multiplier(hspec, weight_shift))
        if abs(closed - value) > 1e-6 * abs(closed):
            warnings.warn(f"{what}: quadrature {value!r} differs from closed form {closed!r}")
    return float(value), err, roots


def kernel_norm_k1(spec: IOperatorSpec, opts: QuadratureOptions = DEFAULT_QUAD) -> float:
    """``k1 = int_0^1 |H(s)| s^-1 ds`` for the I kernel.

    Raises
    ------
    DivergenceError
        ``rho0 <= 0`` or ``mu0 <= 0``.
    SpecError
        Condition (1) fails (slope sums differ) with finite exponents.
    """
    if spec.rho0 <= 0 or spec.mu0 <= 0:
        raise DivergenceError(
            f"k1 diverges (rho0 = {spec.rho0:.6g}, mu0 = {spec.mu0:.6g})")
    if not spec.condition1:
        raise SpecError("condition (1) violated: sum 1/lambda != sum 1/beta")
    return _abs_norm(derive_i_kernel(spec), spec.rho0, spec.mu0, 0.0, opts, "kernel_norm_k1")[0]


def kernel_norm_k2(spec: KOperatorSpec, opts: QuadratureOptions = DEFAULT_QUAD) -> float:
    """``k2 = int_1^inf |H(1/s)| s^-1 ds = int_0^1 |H(v)| v^-1 dv`` for the K kernel."""
    if spec.rho1 <= 0 or spec.mu1 <= 0:
        raise DivergenceError(
            f"k2 diverges (rho1 = {spec.rho1:.6g}, mu1 = {spec.mu1:.6g})")
    if not spec.condition1:
        raise SpecError("condition (1) violated: sum 1/xi != sum 1/epsilon")
    return _abs_norm(derive_k_kernel(spec), spec.rho1, spec.mu1, 0.0, opts, "kernel_norm_k2")[0]


def ho_constant_c1(beta: float, gamma: Sequence[float], delta: Sequence[float],
                   opts: QuadratureOptions = DEFAULT_QUAD) -> float:
    """``c1 = int_0^1 |G[s | gamma+delta; gamma]| s^(-1/beta) ds``."""
    gamma = _tuple(gamma, "gamma")
    delta = _tuple(delta, "delta")
    if not beta > 0:
        raise SpecError("beta must be positive")
    if min(gamma) <= 1.0 / beta - 1.0 or sum(delta) <= 0:
        raise DivergenceError("c1 diverges: need min gamma > 1/beta - 1 and sum delta > 0")
    g = GKernelSpec(tuple(x + d for x, d in zip(gamma, delta)), gamma)
    rho = min(gamma)
    shift = 1.0 - 1.0 / beta
    return _abs_norm(g.to_h(), rho, sum(delta), shift, opts, "ho_constant_c1")[0]


def ho_constant_c2(beta: float, gamma: Sequence[float], delta: Sequence[float],
                   opts: QuadratureOptions = DEFAULT_QUAD) -> float:
    """``c2 = int_1^inf |G[1/s | gamma+delta+1; gamma+1]| s^(-1/beta) ds``.

    Evaluated as ``int_0^1 |G(v)| v^(1/beta - 2) dv``.
    """
    gamma = _tuple(gamma, "gamma")
    delta = _tuple(delta, "delta")
    if not beta > 0:
        raise SpecError("beta must be positive")
    if min(gamma) <= -1.0 / beta or sum(delta) <= 0:
        raise DivergenceError("c2 diverges: need min gamma > -1/beta and sum delta > 0")
    g = GKernelSpec(tuple(x + d + 1 for x, d in zip(gamma, delta)), tuple(x + 1 for x in gamma))
    rho = min(gamma) + 1.0
    shift = 1.0 / beta - 1.0
    return _abs_norm(g.to_h(), rho, sum(delta), shift, opts, "ho_constant_c2")[0]


def power_multiplier_i(spec: IOperatorSpec, p: float) -> float:
    """``I[x^p] / x^p = prod Gamma(gamma+1+p/lambda) / Gamma(gamma+delta+1+p/beta)``."""
    num = [g + 1 + p / l for g, l in zip(spec.gamma, spec.lam)]
    den = [g + d + 1 + p / b for g, d, b in zip(spec.gamma, spec.delta, spec.beta)]
    if min(num) <= 0 and not spec.identity:
        raise DomainError("power multiplier diverges: gamma_k + 1 + p/lambda_k <= 0")
    return gamma_ratio(GammaRatioSpec(num, den))


def power_multiplier_k(spec: KOperatorSpec, p: float) -> float:
    """``K[x^p] / x^p = prod Gamma(tau - p/xi) / Gamma(tau+alpha - p/epsilon)``."""
    num = [t - p / x for t, x in zip(spec.tau, spec.xi)]
    den = [t + a - p / e for t, a, e in zip(spec.tau, spec.alpha, spec.epsilon)]
    if min(num) <= 0 and not spec.identity:
        raise DomainError("power multiplier diverges: tau_k - p/xi_k <= 0")
    return gamma_ratio(GammaRatioSpec(num, den))


# ---------------------------------------------------------------- composition oracle


class _PiecewiseCheb:
    """Piecewise Chebyshev interpolant on the panels between ``edges``."""

    def __init__(self, edges, degree, fun):
        self.edges = np.asarray(edges, dtype=float)
        self.lo, self.hi = self.edges[0], self.edges[-1]
        k = np.arange(degree + 1)
        self.t = np.cos(np.pi * k / degree)[::-1]  # Chebyshev-Lobatto on [-1, 1]
        w = np.where((k == 0) | (k == degree), 0.5, 1.0) * (-1.0) ** k
        self.w = w[::-1]
        left, right = self.edges[:-1], self.edges[1:]
        self.nodes = left[:, None] + 0.5 * (right - left)[:, None] * (self.t[None, :] + 1.0)
        self.values = np.asarray(fun(self.nodes.ravel()), dtype=float).reshape(self.nodes.shape)

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        shape = y.shape
        y = y.ravel()
        out = np.zeros_like(y)
        inside = (y >= self.lo) & (y <= self.hi)
        yi = y[inside]
        idx = np.clip(np.searchsorted(self.edges, yi, side="right") - 1, 0, len(self.edges) - 2)
        a, b = self.edges[idx], self.edges[idx + 1]
        s = 2.0 * (yi - a) / (b - a) - 1.0
        diff = s[:, None] - self.t[None, :]
        exact = diff == 0.0
        diff[exact] = 1.0
        c = self.w[None, :] / diff
        vals = self.values[idx]
        res = np.sum(c * vals, axis=1) / np.sum(c, axis=1)
        hit = exact.any(axis=1)
        if hit.any():
            res[hit] = vals[hit][exact[hit]]
        out[inside] = res
        return out.reshape(shape)


GRADE_RATIO = 0.15
GRADE_LEVELS = 14


def _graded_edges(base, points):
    """``base`` edges refined geometrically towards each of ``points`` from both sides."""
    lo, hi = base[0], base[-1]
    h = (hi - lo) / max(len(base) - 1, 1)
    extra = [lo, hi]
    for c in points:
        if lo < c < hi:
            d = h * GRADE_RATIO ** np.arange(1, GRADE_LEVELS + 1)
            extra += [c, *(c - d), *(c + d)]
    edges = np.unique(np.concatenate([base, np.asarray(extra, dtype=float)]))
    return edges[(edges >= lo) & (edges <= hi)]


def _singular_points(f) -> tuple:
    """Points where a catalog function is not smooth (jumps, kinks)."""
    kind = getattr(f, "kind", None)
    if kind == "power":
        cutoff = f.params[1]
        return (cutoff,) if math.isfinite(cutoff) else ()
    if kind == "tabulated":
        x0, step, values = f.params
        return tuple(x0 + step * np.arange(len(values)))
    return tuple(getattr(f, "breakpoints", ()))


class _SingleEKRule:
    """Quadrature for ``int_0^1 beta u^(beta gamma+beta-1) (1-u^beta)^(delta-1) F(u) du / Gamma(delta)``.

    The end panels carry exact Jacobi weights; interior breakpoints of
    ``F`` are honoured with geometrically graded Gauss-Legendre panels.
    """

    def __init__(self, beta, gamma, delta, panels=48, order=24):
        self.beta = beta
        self.b = beta * gamma + beta - 1.0
        self.a = delta - 1.0
        # grade towards 0: u^beta is not smooth there for non-integer beta
        h = 1.0 / panels
        self.base = np.unique(np.concatenate([np.linspace(0.0, 1.0, panels + 1),
                                              h * GRADE_RATIO ** np.arange(1, GRADE_LEVELS + 1)]))
        self.xg, self.wg = special.roots_legendre(order)
        self.jl = special.roots_jacobi(order, 0.0, self.b)
        self.jr = special.roots_jacobi(order, self.a, 0.0)
        self.scale = beta / special.gamma(delta)
        self.plain = self._build(self.base)

    def _ratio(self, u):
        # (1-u^beta)/(1-u), smooth and positive on [0, 1]
        one_minus = 1.0 - u
        with np.errstate(divide="ignore", invalid="ignore"):
            r = -np.expm1(self.beta * np.log(u)) / one_minus
        return np.where(one_minus == 0, self.beta, r)

    def _build(self, edges):
        b, a, beta = self.b, self.a, self.beta
        nodes, weights = [], []
        h = edges[1]
        xj, wj = self.jl
        u = h * 0.5 * (xj + 1.0)
        nodes.append(u)
        weights.append(wj * 2.0 ** (-(b + 1.0)) * h ** (b + 1.0) * (1.0 - u ** beta) ** a)
        lo, hi = edges[1:-2], edges[2:-1]
        if len(lo):
            u = (lo[:, None] + 0.5 * (hi - lo)[:, None] * (self.xg[None, :] + 1.0)).ravel()
            w = (0.5 * (hi - lo)[:, None] * self.wg[None, :]).ravel()
            nodes.append(u)
            weights.append(w * u ** b * (1.0 - u ** beta) ** a)
        h = 1.0 - edges[-2]
        xj, wj = self.jr
        u = 1.0 - h * 0.5 * (1.0 - xj)
        nodes.append(u)
        weights.append(wj * 2.0 ** (-(a + 1.0)) * h ** (a + 1.0) * u ** b * self._ratio(u) ** a)
        return np.concatenate(nodes), np.concatenate(weights) * self.scale

    def apply(self, fun, ys, singular=()):
        """``int w(u) fun(y u) du`` for every ``y`` in ``ys``."""
        ys = np.asarray(ys, dtype=float)
        out = np.empty(len(ys))
        sing = np.asarray(singular, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            cuts = sing[None, :] / ys[:, None] if len(sing) else np.zeros((len(ys), 0))
        inner = (cuts > 0) & (cuts < 1)
        plain = ~inner.any(axis=1)
        u, w = self.plain
        if plain.any():
            yp = ys[plain]
            out[plain] = (np.asarray(fun(yp[:, None] * u[None, :]), dtype=float)
                          * w[None, :]).sum(axis=1)
        for i in np.nonzero(~plain)[0]:
            ui, wi = self._build(_graded_edges(self.base, cuts[i][inner[i]]))
            out[i] = float(np.dot(np.asarray(fun(ys[i] * ui), dtype=float), wi))
        return out


def compose_single_ek(spec: IOperatorSpec, f: TestFunction, x_grid,
                      opts: QuadratureOptions = DEFAULT_QUAD, *, panels: int = 128,
                      degree: int = 16):
    """Apply the I operator as a composition of single Erdelyi-Kober integrals.

    Each factor ``beta u^(beta gamma+beta-1) (1-u^beta)^(delta-1) / Gamma(delta)``
    is integrated with a composite Gauss rule whose end panels carry the
    exact Jacobi weights.  Jumps and kinks of ``f`` stay at fixed points
    through every stage, so the rules are split there and intermediate
    results are stored as piecewise Chebyshev interpolants graded towards
    them.  This route never touches the H kernel and serves as an
    independent oracle.
    """
    if spec.beta != spec.lam:
        raise SpecError("composition form requires lambda_k = beta_k")
    xs, uniform = as_points(x_grid)
    factors = [(b, g, d) for b, g, d in zip(spec.beta, spec.gamma, spec.delta) if d > 0]
    if not factors:
        return _finish(xs, np.asarray(f(xs), dtype=float), 0.0, uniform)
    lo = min(0.0, float(xs.min()))
    hi = max(0.0, float(xs.max()))
    if hi == lo:
        hi = lo + 1.0
    sing = tuple(s for s in _singular_points(f) if lo < s < hi and s != 0.0)
    edges = _graded_edges(np.linspace(lo, hi, panels + 1), sing)
    rules = [_SingleEKRule(*fac) for fac in factors]
    current: Callable = f
    for rule in rules[:-1]:
        prev = current

        def stage(y, prev=prev, rule=rule):
            return rule.apply(prev, y, sing)

        current = _PiecewiseCheb(edges, degree, stage)
    vals = rules[-1].apply(current, xs, sing)
    return _finish(xs, vals, opts.rel_tol * float(np.max(np.abs(vals), initial=0.0)), uniform)


# ---------------------------------------------------------------- Hausdorff operators


@dataclass
class HausdorffReport:
    """Outcome of the positivity / integrability check for a kernel phi."""

    nonnegative: bool
    integral: float
    convergent: bool
    bounded: bool | None
    verdict: str
    min_sample: float = 0.0

    def to_json(self) -> dict:
        return {"nonnegative": self.nonnegative,
                "integral": self.integral if self.convergent else "divergent",
                "convergent": self.convergent, "bounded": self.bounded,
                "verdict": self.verdict, "min_sample": self.min_sample}


def _tail_exponent(us, vals):
    """Log-log slope of |phi| over a decade of samples (nan if phi vanishes)."""
    mag = np.abs(vals)
    keep = mag > 0
    if keep.sum() < 3:
        return math.nan
    return float(np.polyfit(np.log(us[keep]), np.log(mag[keep]), 1)[0])


def hausdorff_admissibility(phi: Callable, opts: QuadratureOptions = DEFAULT_QUAD, *,
                            span=(1e-8, 1e8), samples: int = 1601,
                            breakpoints: Sequence[float] = ()) -> HausdorffReport:
    """Check positivity and integrability of ``phi(u)/u`` on ``(0, inf)``.

    For a nonnegative kernel the Hausdorff operator
    ``f -> int_0^inf phi(u) f(xu) du`` is bounded on H^1 exactly when
    ``int_0^inf phi(u) u^-1 du`` is finite; for sign-changing kernels
    positivity is not available and no conclusion is drawn.

    The integral is computed on ``span`` in the variable ``log u`` and
    the two tails are closed with power-law fits over the outermost
    decade of samples; a non-decaying tail is reported as divergence.
    """
    lo, hi = span
    us = np.geomspace(lo, hi, samples)
    vals = np.array([float(phi(u)) for u in us])
    nonneg = bool(np.all(vals >= -1e-12))
    scale = float(np.max(np.abs(vals), initial=0.0))
    # tails: phi ~ C u^a near 0 contributes phi(lo)/a, needs a > 0
    dec = max(3, samples // int(round(math.log10(hi / lo))))
    convergent = True
    tail = 0.0
    a0 = _tail_exponent(us[:dec], vals[:dec])
    if abs(vals[0]) > 1e-14 * max(scale, 1e-300):
        if not (a0 > 1e-2):
            convergent = False
        else:
            tail += vals[0] / a0
    a1 = _tail_exponent(us[-dec:], vals[-dec:])
    if abs(vals[-1]) > 1e-14 * max(scale, 1e-300):
        if not (a1 < -1e-2):
            convergent = False
        else:
            tail += vals[-1] / (-a1)
    integral = math.inf
    if convergent:
        cuts = sorted({math.log(lo), math.log(hi), *[math.log(b) for b in breakpoints if lo < b < hi]})
        total = 0.0
        for y0, y1 in zip(cuts[:-1], cuts[1:]):
            r, _ = integrate.quad(lambda y: float(phi(math.exp(y))), y0, y1,
                                  epsabs=opts.abs_tol, epsrel=opts.rel_tol,
                                  limit=opts.max_subdivisions)
            total += r
        integral = total + tail
    if not nonneg:
        verdict = "positivity criterion inapplicable (kernel changes sign)"
        bounded = None
    elif convergent:
        verdict = "nonnegative kernel with finite integral of phi(u)/u: bounded on H^1"
        bounded = True
    else:
        verdict = "nonnegative kernel with divergent integral of phi(u)/u: not bounded on H^1"
        bounded = False
    return HausdorffReport(nonneg, float(integral), convergent, bounded, verdict,
                           float(vals.min()))


def hausdorff_kernel_from_i(spec: IOperatorSpec) -> Callable:
    """``phi(u) = H(u)`` on (0, 1), zero elsewhere (the I operator as Hausdorff operator)."""
    ker = get_kernel(derive_i_kernel(spec))

    def phi(u):
        if 0.0 < u < 1.0:
            return ker.evaluate(u).value
        return 0.0

    return phi


def hausdorff_kernel_from_k(spec: KOperatorSpec) -> Callable:
    """``phi(u) = H(1/u)`` on (1, inf), zero elsewhere."""
    ker = get_kernel(derive_k_kernel(spec))

    def phi(u):
        if u > 1.0:
            return ker.evaluate(1.0 / u).value
        return 0.0

    return phi


def piecewise_power_kernel(pieces: Sequence[Sequence[float]]) -> Callable:
    """``phi(u) = sum c u^p`` over pieces ``(lo, hi, c, p)`` with ``lo < u < hi``."""
    pieces = [tuple(float(v) for v in p) for p in pieces]

    def phi(u):
        return sum(c * u ** p for lo, hi, c, p in pieces if lo < u < hi)

    return phi
