"""Delta-neutral H^{m,0}_{m,m} and G^{m,0}_{m,m} kernels on (0, 1).

The main evaluator sums residues at the poles ``s = -(b_j + n) / B_j``.
When every slope ratio is an integer the coefficients come from an exact
rational recurrence and the sum is carried in double-double arithmetic;
otherwise each coefficient is built from ``log|Gamma|``.  Close to the
singular endpoint, where the series needs too many terms, a fixed Talbot
deformation of the Mellin-Barnes loop is used instead.
"""
from __future__ import annotations

import json
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from scipy import special, stats

from . import _backend
from ._ddcore_py import dd_div, dd_mul
from .errors import ConvergenceError, DeltaNeutralityError, DomainError, SpecError
from .gamma import POLE_TOL, GammaRatioSpec, gamma_ratio, real_log_gamma, gammaln_sign, log_gamma_array, log_gamma_ratio

DELTA_TOL = 1e-12
RADIUS_ONE_TOL = 1e-13
_EPS = np.finfo(float).eps
# residue results whose error bound exceeds this relative size are cross-checked on the contour
CANCEL_REL = 1e-12
_PERTURB_DIRS = np.sqrt(np.array([1.0, 2.0, 3.0, 5.0, 6.0, 7.0, 10.0, 11.0, 13.0, 14.0]))

METHODS = (
    "residue_series",
    "perturbed_residue_series",
    "reduction_to_g",
    "contour_integral",
    "endpoint_asymptotic",
)


# ---------------------------------------------------------------- specs


@dataclass(frozen=True)
class HKernelSpec:
    """Parameters of ``H^{m,0}_{m,m}[z | (a_k, A_k); (b_k, B_k)]``.

    Attributes
    ----------
    upper : tuple of (float, float)
        Pairs ``(a_k, A_k)`` for the gamma functions in the denominator.
    lower : tuple of (float, float)
        Pairs ``(b_k, B_k)`` for the gamma functions in the numerator.
    """

    upper: tuple
    lower: tuple

    def __post_init__(self):
        object.__setattr__(self, "upper", tuple((float(a), float(A)) for a, A in self.upper))
        object.__setattr__(self, "lower", tuple((float(b), float(B)) for b, B in self.lower))

    @property
    def m(self) -> int:
        return len(self.lower)

    @property
    def delta_sum(self) -> float:
        """Slope imbalance ``sum A - sum B``."""
        return math.fsum(A for _, A in self.upper) - math.fsum(B for _, B in self.lower)

    @property
    def radius(self) -> float:
        """Radius of convergence ``prod A^-A prod B^B``."""
        log_r = math.fsum(B * math.log(B) for _, B in self.lower) - math.fsum(
            A * math.log(A) for _, A in self.upper)
        r = math.exp(log_r)
        return 1.0 if abs(r - 1.0) <= RADIUS_ONE_TOL else r

    @property
    def mu(self) -> float:
        return math.fsum(a for a, _ in self.upper) - math.fsum(b for b, _ in self.lower)

    @property
    def rho_star(self) -> float:
        return min(b / B for b, B in self.lower)

    @property
    def radius_warning(self) -> bool:
        """True when the kernel is not defined on all of (0, 1)."""
        return self.radius < 1.0

    def to_json(self) -> dict:
        return {"upper": [list(p) for p in self.upper], "lower": [list(p) for p in self.lower]}

    @classmethod
    def from_json(cls, obj) -> "HKernelSpec":
        if isinstance(obj, str):
            obj = json.loads(obj)
        try:
            return cls(tuple(tuple(p) for p in obj["upper"]), tuple(tuple(p) for p in obj["lower"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecError(f"malformed kernel spec: {exc}") from exc


@dataclass(frozen=True)
class GKernelSpec:
    """Parameters of ``G^{m,0}_{m,m}[z | a; b]`` (all slopes equal to one)."""

    upper: tuple
    lower: tuple

    def __post_init__(self):
        object.__setattr__(self, "upper", tuple(float(a) for a in self.upper))
        object.__setattr__(self, "lower", tuple(float(b) for b in self.lower))
        if len(self.upper) != len(self.lower) or not self.lower:
            raise SpecError("G kernel needs equally many (>= 1) upper and lower parameters")

    @property
    def m(self) -> int:
        return len(self.lower)

    @property
    def mu(self) -> float:
        return math.fsum(self.upper) - math.fsum(self.lower)

    def to_h(self) -> HKernelSpec:
        return HKernelSpec(tuple((a, 1.0) for a in self.upper), tuple((b, 1.0) for b in self.lower))

    def shifted(self, rho: float) -> "GKernelSpec":
        return GKernelSpec(tuple(a + rho for a in self.upper), tuple(b + rho for b in self.lower))


def validate_h_spec(raw) -> HKernelSpec:
    """Validate kernel parameters.

    Parameters
    ----------
    raw : HKernelSpec, GKernelSpec, mapping or (upper, lower) pair

    Returns
    -------
    HKernelSpec
        Spec with derived quantities available as properties.  A
        ``UserWarning`` is issued when the radius is below one.

    Raises
    ------
    SpecError
        Shape problems or non-positive / non-finite slopes.
    DeltaNeutralityError
        If ``|sum A - sum B| > 1e-12``.
    """
    if isinstance(raw, GKernelSpec):
        spec = raw.to_h()
    elif isinstance(raw, HKernelSpec):
        spec = raw
    elif isinstance(raw, dict):
        spec = HKernelSpec.from_json(raw)
    else:
        try:
            upper, lower = raw
            spec = HKernelSpec(tuple(upper), tuple(lower))
        except (TypeError, ValueError) as exc:
            raise SpecError(f"cannot interpret kernel spec {raw!r}") from exc
    if spec.m < 1 or len(spec.upper) != len(spec.lower):
        raise SpecError("kernel needs equally many (>= 1) upper and lower pairs")
    for x, X in spec.upper + spec.lower:
        if not (math.isfinite(x) and math.isfinite(X)):
            raise SpecError("kernel parameters must be finite")
        if X <= 0:
            raise SpecError(f"slopes must be positive, got {X}")
    if abs(spec.delta_sum) > DELTA_TOL:
        raise DeltaNeutralityError(
            f"delta-neutrality violated: sum A - sum B = {spec.delta_sum:.3g}")
    if spec.radius_warning:
        warnings.warn(
            f"kernel radius {spec.radius:.6g} < 1: defined only on (0, {spec.radius:.6g})",
            UserWarning, stacklevel=2)
    return spec


# ---------------------------------------------------------------- results


@dataclass
class EvalResult:
    """Kernel value with a bound on its numerical error."""

    value: float
    abs_error_estimate: float
    terms_used: int
    method: str

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "abs_error_estimate", float(self.abs_error_estimate))
        object.__setattr__(self, "terms_used", int(self.terms_used))

@dataclass
class ExponentFit:
    """Least-squares log-log slope near an endpoint."""

    endpoint: str
    fitted_exponent: float
    r_squared: float
    window: tuple
    sample_count: int
    intercept: float = float("nan")

    def __post_init__(self):
        self.fitted_exponent = float(self.fitted_exponent)
        self.r_squared = float(self.r_squared)
        self.intercept = float(self.intercept)


@dataclass(frozen=True)
class EvalOptions:
    """Knobs of the kernel evaluator.

    Attributes
    ----------
    tail_rel : float
        Stop a residue series once its tail bound is below this fraction
        of the running inner sum.
    tail_abs : float
        Absolute floor for the tail bound, in units of the kernel value.
    term_cap : int
        Maximum number of residues per pole lattice.
    residue_switch : int
        Use the contour evaluator when a lattice would need more terms.
    contour_nodes : int
        Number of Talbot nodes.
    endpoint_cutoff : float
        Relative distance to the singular endpoint below which the
        asymptotic form is returned.
    collision_tol : float
        Distance to a lattice collision treated as exact.
    """

    tail_rel: float = 1e-13
    tail_abs: float = 0.0
    term_cap: int = 100_000
    residue_switch: int = 4000
    contour_nodes: int = 20
    endpoint_cutoff: float = 1e-8
    collision_tol: float = 1e-7


DEFAULT_OPTIONS = EvalOptions()


# ---------------------------------------------------------------- helpers


def _is_int(x: float, tol: float = 1e-12) -> bool:
    return abs(x - round(x)) <= tol * max(1.0, abs(x)) and round(x) >= 1


def _cancel_pairs(upper, lower):
    """Drop identical (a, A) = (b, B) pairs, whose gamma factors cancel."""
    up = list(upper)
    lo = []
    for pair in lower:
        if pair in up:
            up.remove(pair)
        else:
            lo.append(pair)
    return tuple(up), tuple(lo)


def _bernoulli_poly(k: int, x):
    bn = special.bernoulli(k)
    return sum(special.comb(k, j, exact=False) * bn[j] * x ** (k - j) for j in range(k + 1))


def _thread_count() -> int:
    raw = os.environ.get("EKH_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


class _Series:
    """Residue lattice ``s = -(b_j + n) / B_j`` of one numerator gamma."""

    def __init__(self, j, a, A, b, B, radius, mu, opts):
        self.inv_B = 1.0 / B[j]
        self.expo = b[j] / B[j]
        self.rho = radius ** self.inv_B
        others = [k for k in range(len(b)) if k != j]
        kappa = np.array([B[k] / B[j] for k in others])
        nu = np.array([A[k] / B[j] for k in range(len(a))])
        self.exact = all(_is_int(x) for x in kappa) and all(_is_int(x) for x in nu) \
            and (kappa.sum() + nu.sum() <= 64)
        self.power = max(0.0, -mu) + 1.0
        self.window = 8 if self.exact else 16
        self.opts = opts
        self.integer_w = _is_int(self.inv_B) and self.inv_B <= 8
        if self.exact:
            self.kappa = np.array([int(round(x)) for x in kappa], dtype=np.int64)
            self.nu = np.array([int(round(x)) for x in nu], dtype=np.int64)
            xs = [_dd_sub_prod(b[k], int(kk), b[j]) for k, kk in zip(others, self.kappa)]
            ys = [_dd_sub_prod(a[k], int(nn), b[j]) for k, nn in zip(range(len(a)), self.nu)]
            self.x0_hi = np.array([x[0] for x in xs])
            self.x0_lo = np.array([x[1] for x in xs])
            self.y0_hi = np.array([y[0] for y in ys])
            self.y0_lo = np.array([y[1] for y in ys])
            x0 = self.x0_hi + self.x0_lo
            y0 = self.y0_hi + self.y0_lo
            lg, sg = _log_gamma_ratio_dd(xs, ys)
            self.log_pref = lg - math.log(B[j])
            self.sign_pref = sg
        else:
            self.kappa_f = kappa
            self.nu_f = nu
            self.x0 = np.array([b[k] - B[k] * self.expo for k in others])
            self.y0 = np.array([a[k] - A[k] * self.expo for k in range(len(a))])
            x0, y0 = self.x0, self.y0
            self.log_pref = None
            self.sign_pref = 1
        scale = [abs(v) for v in x0] + [abs(v) for v in y0]
        steps = list(kappa) + list(nu)
        reach = max([(s + 1.0) / st for s, st in zip(scale, steps)] + [0.0])
        self.n_min = int(math.ceil(reach)) + 4
        self.c_hi = np.zeros(0)
        self.c_lo = np.zeros(0)
        self.n_valid = 0

    # coefficients -------------------------------------------------------
    def _grow(self, n_terms: int):
        n_terms = min(int(n_terms), self.opts.term_cap)
        if n_terms <= len(self.c_hi):
            return
        n_terms = min(max(n_terms, 2 * len(self.c_hi)), self.opts.term_cap)
        if self.exact:
            c_hi, c_lo, n_valid = _backend.recurrence_coeffs(
                n_terms, self.x0_hi, self.x0_lo, self.kappa, self.y0_hi, self.y0_lo,
                self.nu, self.rho)
        else:
            n = np.arange(n_terms, dtype=float)
            logc = -special.gammaln(n + 1.0) + n * math.log(self.rho)
            # magnitude of the summed logs, for the rounding estimate
            logmag = np.abs(logc)
            sign = np.where(n % 2 == 0, 1.0, -1.0)
            for x0, kap in zip(self.x0, self.kappa_f):
                lg, sg = gammaln_sign(x0 - kap * n)
                logc = logc + lg
                logmag = logmag + np.abs(np.where(np.isfinite(lg), lg, 0.0))
                sign = sign * sg
            for y0, nu in zip(self.y0, self.nu_f):
                lg, sg = gammaln_sign(y0 - nu * n)
                zero = sg == 0
                logc = logc - np.where(zero, 0.0, lg)
                logmag = logmag + np.abs(np.where(zero, 0.0, lg))
                sign = np.where(zero, 0.0, sign * sg)
            self.logmag = logmag
            if self.log_pref is None:
                finite = np.isfinite(logc) & (sign != 0)
                ref = logc[0] if finite[0] else (logc[finite][:32].max() if finite.any() else 0.0)
                self.log_norm = float(ref)
                self.log_pref = self.log_norm + math.log(self.inv_B)
            c_hi = np.where(sign == 0, 0.0, sign * np.exp(np.minimum(logc - self.log_norm, 700.0)))
            c_lo = np.zeros_like(c_hi)
            n_valid = n_terms
        self.c_hi, self.c_lo, self.n_valid = c_hi, c_lo, int(n_valid)

    def predicted_terms(self, q: float) -> float:
        if q <= 0:
            return float(self.n_min)
        if q >= 1:
            return math.inf
        lq = -math.log(q)
        return self.n_min + (40.0 + self.power * math.log(2.0 + 1.0 / lq)) / lq

    def ratio(self, lnz: float) -> float:
        return math.exp((lnz - math.log(self.rho ** (1.0 / self.inv_B))) * self.inv_B)

    # summation ----------------------------------------------------------
    def value(self, z: float, lnz: float, tail_rel: float, tail_abs: float):
        if self.sign_pref == 0:
            return 0.0, 0.0, 0
        if self.inv_B == 1.0:
            w_hi, w_lo = z, 0.0
        elif self.integer_w:
            w_hi, w_lo = z, 0.0
            for _ in range(int(round(self.inv_B)) - 1):
                w_hi, w_lo = dd_mul(w_hi, w_lo, z, 0.0)
        else:
            w_hi, w_lo = math.exp(lnz * self.inv_B), 0.0
        if self.rho != 1.0:
            w_hi, w_lo = dd_div(w_hi, w_lo, self.rho, 0.0)
        q = abs(w_hi)
        want = self.predicted_terms(q)
        if not math.isfinite(want):
            raise ConvergenceError("residue series diverges at this argument")
        self._grow(int(want * 1.25) + 64)
        if self.sign_pref == 0:
            return 0.0, 0.0, 0
        log_scale = self.log_pref + self.expo * lnz
        scale = math.exp(log_scale) if log_scale < 709 else math.inf
        while True:
            tol_abs = tail_abs / scale if scale > 0 else 0.0
            s_hi, s_lo, n_used, tail, abs_sum, ok = _backend.power_sum(
                self.c_hi, self.c_lo, self.n_valid, w_hi, w_lo, q, self.power,
                self.n_min, self.window, tol_abs, tail_rel)
            if ok or self.n_valid < len(self.c_hi):
                break
            if len(self.c_hi) >= self.opts.term_cap:
                raise ConvergenceError(
                    f"residue series not converged within {self.opts.term_cap} terms")
            self._grow(2 * len(self.c_hi))
        if self.n_valid < len(self.c_hi):
            # recurrence hit a zero denominator: terminating series
            tail = 0.0
        total = s_hi + s_lo
        value = self.sign_pref * scale * total
        rounding = 4 * _EPS * abs(value) * (1.0 + abs(log_scale))
        if not self.exact:
            lm = float(self.logmag[min(n_used, len(self.logmag)) - 1]) if n_used else 0.0
            rounding += 4 * _EPS * scale * abs_sum * (1.0 + lm + math.sqrt(n_used))
        else:
            rounding += 1e-30 * scale * abs_sum * n_used
        return value, scale * tail + rounding, n_used


def _log_gamma_dd(hi: float, lo: float):
    """``(log|Gamma(x)|, sign)`` for ``x = hi + lo``, accurate next to poles.

    Near ``-m`` the distance ``x + m`` is formed from both words, so a
    nearly colliding lattice keeps its large prefactor to full precision.
    """
    x = hi + lo
    m = -round(x)
    if m < 0 or abs(x + m) >= 0.5 or m > 170:
        return None
    d = (hi + m) + lo
    if abs(d) <= POLE_TOL:
        return None
    lg = math.lgamma(1.0 + d) - math.log(abs(d))
    sg = 1.0 if d > 0 else -1.0
    for i in range(m):
        lg -= math.log(abs(x + i))
        if x + i < 0:
            sg = -sg
    return lg, sg


def _log_gamma_ratio_dd(num, den):
    """Log of ``prod Gamma(num) / prod Gamma(den)`` for double-double arguments."""
    rest_n, rest_d = [], []
    lg, sg = 0.0, 1.0
    for items, rest, sgn in ((num, rest_n, 1.0), (den, rest_d, -1.0)):
        for hi, lo in items:
            r = _log_gamma_dd(hi, lo)
            if r is None:
                rest.append(hi + lo)
            else:
                lg += sgn * r[0]
                sg *= r[1]
    lg2, sg2 = log_gamma_ratio(GammaRatioSpec(rest_n, rest_d))
    return lg + lg2, sg * sg2


def _dd_sub_prod(x: float, k: int, y: float):
    """``x - k*y`` in double-double."""
    from ._ddcore_py import dd_add, two_prod
    p, e = two_prod(float(k), y)
    return dd_add(x, 0.0, -p, -e)


# ---------------------------------------------------------------- evaluator


class HKernel:
    """Callable evaluator for a validated delta-neutral kernel.

    Parameters
    ----------
    spec : HKernelSpec or compatible
    options : EvalOptions, optional
    """

    def __init__(self, spec, options: EvalOptions | None = None, *, _collision_free=False):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            self.spec = validate_h_spec(spec)
        self.opts = options or DEFAULT_OPTIONS
        self.radius = self.spec.radius
        self.mu = self.spec.mu
        self.rho_star = self.spec.rho_star
        up, lo = _cancel_pairs(self.spec.upper, self.spec.lower)
        self.upper, self.lower = up, lo
        self.trivial = len(lo) == 0
        self._a = np.array([p[0] for p in up])
        self._A = np.array([p[1] for p in up])
        self._b = np.array([p[0] for p in lo])
        self._B = np.array([p[1] for p in lo])
        slopes = {A for _, A in self.spec.upper} | {B for _, B in self.spec.lower}
        self.beta = 1.0 / slopes.pop() if len(slopes) == 1 else None
        self._g = None
        if self.beta is not None and self.beta != 1.0:
            self._g = HKernel(HKernelSpec(tuple((a, 1.0) for a, _ in self.spec.upper),
                                          tuple((b, 1.0) for b, _ in self.spec.lower)),
                              self.opts)
        self._perturbed = None
        self._series = []
        self._asym_c = None
        self._contour_ready = False
        if self.trivial or self._g is not None:
            return
        cluster = 1 if _collision_free else self._collision_multiplicity()
        if cluster > 1:
            eps = 1e-6 if cluster == 2 else _EPS ** (1.0 / (cluster + 1))
            kids = []
            for sgn in (1.0, -1.0):
                dirs = _PERTURB_DIRS[: len(self.spec.lower)]
                lower = tuple((b + sgn * eps * d, B) for (b, B), d in zip(self.spec.lower, dirs))
                kids.append(HKernel(HKernelSpec(self.spec.upper, lower), self.opts,
                                    _collision_free=True))
            self._perturbed = (kids, eps)
            return
        self._series = [_Series(j, self._a, self._A, self._b, self._B, self.radius,
                                self.mu, self.opts) for j in range(len(self._b))]

    # -- collision analysis -------------------------------------------
    def _collision_multiplicity(self) -> int:
        b, B = self._b, self._B
        m = len(b)
        if m < 2:
            return 1
        tol = self.opts.collision_tol
        adj = np.zeros((m, m), dtype=bool)
        for j in range(m):
            for k in range(m):
                if j == k:
                    continue
                kappa = B[k] / B[j]
                n = np.arange(0, 20000 if not _is_int(kappa) else 1, dtype=float)
                x = b[k] - kappa * (b[j] + n)
                if _is_int(kappa):
                    frac = x[0] - round(x[0])
                    hit = abs(frac) <= tol
                else:
                    hit = bool(np.any((x < 0.5) & (np.abs(x - np.round(x)) <= tol)))
                if hit:
                    adj[j, k] = adj[k, j] = True
        # size of largest connected component
        seen = set()
        best = 1
        for s in range(m):
            if s in seen:
                continue
            stack, comp = [s], 0
            seen.add(s)
            while stack:
                u = stack.pop()
                comp += 1
                for v in np.nonzero(adj[u])[0]:
                    if v not in seen:
                        seen.add(int(v))
                        stack.append(int(v))
            best = max(best, comp)
        return best

    @property
    def has_collision(self) -> bool:
        return self._perturbed is not None

    # -- domain ---------------------------------------------------------
    def _resolve(self, z, zeta):
        if zeta is not None:
            zeta = float(zeta)
            if not (0.0 < zeta <= 1.0):
                raise DomainError(f"complement 1 - z = {zeta!r} outside (0, 1]")
            z = 1.0 - zeta
            lnz = math.log1p(-zeta)
        else:
            z = float(z)
            if not (0.0 < z < 1.0) or not math.isfinite(z):
                raise DomainError(f"z = {z!r} outside (0, 1)")
            lnz = math.log(z)
            zeta = 1.0 - z
        if lnz >= math.log(self.radius) or (self.radius != 1.0 and z >= self.radius):
            raise DomainError(f"z = {z!r} outside the kernel domain (0, {self.radius:.6g})")
        if self.radius == 1.0:
            dist = zeta
        else:
            dist = self.radius - z
        return z, lnz, zeta, dist

    # -- evaluation -----------------------------------------------------
    def evaluate(self, z=None, *, zeta=None, method: str = "auto",
                 tail_rel: float | None = None, tail_abs: float | None = None) -> EvalResult:
        """Evaluate the kernel at ``z`` (or at ``z = 1 - zeta``).

        Parameters
        ----------
        z : float
            Point in ``(0, min(1, radius))``.
        zeta : float, optional
            Complement ``1 - z``; use it to place points close to 1
            without rounding.
        method : {"auto", "residue", "contour", "reduction"}
            Force an evaluation route.  ``"auto"`` follows the routing
            rules described in the module docstring.
        tail_rel, tail_abs : float, optional
            Override the series stopping tolerances.
        """
        z, lnz, zeta, dist = self._resolve(z, zeta)
        tr = self.opts.tail_rel if tail_rel is None else tail_rel
        ta = self.opts.tail_abs if tail_abs is None else tail_abs
        if self.trivial:
            return EvalResult(0.0, 0.0, 0, "residue_series")
        if method == "contour":
            v, e, nodes = self._contour(lnz, zeta)
            return EvalResult(v, e, nodes, "contour_integral")
        if self._g is not None and method in ("auto", "reduction"):
            beta = self.beta
            lng = beta * lnz
            if lng < -0.5:
                r = self._g.evaluate(math.exp(lng), tail_rel=tr, tail_abs=ta / beta)
            else:
                r = self._g.evaluate(zeta=-math.expm1(lng), tail_rel=tr, tail_abs=ta / beta)
            return EvalResult(beta * r.value, beta * r.abs_error_estimate, r.terms_used,
                              "reduction_to_g")
        if method == "reduction":
            raise SpecError("reduction path needs all slopes equal")
        if self._g is not None:
            # residue series forced on a reducible spec
            return self._residue_direct(z, lnz, tr, ta)
        if method == "auto" and self.radius <= 1.0 and dist < self.opts.endpoint_cutoff * self.radius:
            return self._endpoint(lnz)
        if self._perturbed is not None:
            if method == "auto" and self._needs_contour(lnz):
                v, e, nodes = self._contour(lnz, zeta)
                return EvalResult(v, e, nodes, "contour_integral")
            kids, eps = self._perturbed
            rs = [k._residue_eval(z, lnz, tr, ta) for k in kids]
            value = 0.5 * (rs[0][0] + rs[1][0])
            err = max(rs[0][1], rs[1][1], 1e-5 * abs(value), 0.5 * abs(rs[0][0] - rs[1][0]) * eps)
            return EvalResult(value, err, max(r[2] for r in rs), "perturbed_residue_series")
        if method == "auto" and self._needs_contour(lnz):
            v, e, nodes = self._contour(lnz, zeta)
            return EvalResult(v, e, nodes, "contour_integral")
        v, e, n = self._residue_eval(z, lnz, tr, ta)
        if method == "auto" and e > CANCEL_REL * abs(v):
            # series cancel against each other; the contour has no such loss
            cv, ce, nodes = self._contour(lnz, zeta)
            if ce < e:
                return EvalResult(cv, ce, nodes, "contour_integral")
        return EvalResult(v, e, n, "residue_series")

    __call__ = evaluate

    def value(self, z=None, *, zeta=None) -> float:
        return self.evaluate(z, zeta=zeta).value

    def _residue_direct(self, z, lnz, tr, ta):
        direct = HKernel.__new__(HKernel)
        direct.__dict__.update(self.__dict__)
        direct._g = None
        if not self._series and self._perturbed is None:
            cluster = self._collision_multiplicity()
            if cluster > 1:
                raise ConvergenceError("forced residue path on a colliding lattice")
            self._series = [_Series(j, self._a, self._A, self._b, self._B, self.radius,
                                    self.mu, self.opts) for j in range(len(self._b))]
            direct._series = self._series
        v, e, n = direct._residue_eval(z, lnz, tr, ta)
        return EvalResult(v, e, n, "residue_series")

    def _needs_contour(self, lnz: float) -> bool:
        series = self._series or self._perturbed[0][0]._series
        lnr = math.log(self.radius)
        return any(s.predicted_terms(math.exp((lnz - lnr) * s.inv_B)) > self.opts.residue_switch
                   for s in series)

    def _residue_eval(self, z, lnz, tail_rel, tail_abs):
        total = 0.0
        err = 0.0
        used = 0
        for s in self._series:
            v, e, n = s.value(z, lnz, tail_rel, tail_abs)
            total += v
            err += e
            used = max(used, n)
        err += 2 * _EPS * abs(total)
        return total, err, used

    # -- contour --------------------------------------------------------
    def _prepare_contour(self):
        a, A, b, B = self._a, self._A, self._b, self._B
        self._log_delta = math.log(self.radius)
        self._asy_const = float(np.sum((b - 0.5) * np.log(B)) - np.sum((a - 0.5) * np.log(A)))
        self._asy_coef = []
        for k in range(2, 13):
            c = float(np.sum(_bernoulli_poly(k, b) / B ** (k - 1))
                      - np.sum(_bernoulli_poly(k, a) / A ** (k - 1)))
            self._asy_coef.append((k, (-1) ** k * c / (k * (k - 1))))
        self._big_radius = (60.0 + 4.0 * float(np.max(np.abs(np.concatenate([a, b]))))) / float(
            min(A.min(), B.min()))
        # one unit right of the rightmost pole, so e^(sigma T) tracks the z^rho* decay
        self._sigma = 1.0 - float(np.min(b / B))
        self._contour_ready = True

    def log_mellin(self, s):
        """``log(M(s) radius^-s)`` with ``M(s) = prod Gamma(b+Bs)/Gamma(a+As)``."""
        if not self._contour_ready:
            self._prepare_contour()
        s = np.asarray(s, dtype=complex)
        big = (np.abs(s) > self._big_radius) & (s.real > -0.5 * np.abs(s))
        out = np.empty_like(s)
        if (~big).any():
            t = s[~big]
            acc = -t * self._log_delta
            for a, A in zip(self._a, self._A):
                acc = acc - log_gamma_array(a + A * t)
            for b, B in zip(self._b, self._B):
                acc = acc + log_gamma_array(b + B * t)
            out[~big] = acc
        if big.any():
            t = s[big]
            acc = -self.mu * np.log(t) + self._asy_const
            inv = 1.0 / t
            p = inv
            for _, c in self._asy_coef:
                acc = acc + c * p
                p = p * inv
            out[big] = acc
        return out

    def _log_size(self, s, T: float) -> np.ndarray:
        """Rough size of the terms summed in ``log_mellin(s) + T s``."""
        w = np.concatenate([self._a[:, None] + self._A[:, None] * s,
                            self._b[:, None] + self._B[:, None] * s])
        aw = np.abs(w) + 1.0
        return np.sum(aw * (np.abs(np.log(aw)) + 1.0), axis=0) + np.abs(s) * (T + abs(self._log_delta))

    def _talbot(self, T: float, N: int) -> float:
        sig = self._sigma
        r = 2.0 * N / (5.0 * T)
        th = np.arange(1, N) * np.pi / N
        cot = 1.0 / np.tan(th)
        s = r * th * (cot + 1j)
        dsig = th + (th * cot - 1.0) * cot
        head = 0.5 * math.exp(float(self.log_mellin(np.array([r + sig]))[0].real) + r * T)
        arg = self.log_mellin(s + sig) + T * s
        body = np.exp(arg) * (1.0 + 1j * dsig)
        scale = math.exp(sig * T) * r / N
        # exp turns an absolute rounding error in arg into a relative one; the
        # error scales with the log-gamma terms, which can cancel inside arg
        mass = (abs(head) * (1.0 + self._log_size(np.array([r + sig]), T)[0])
                + float(np.sum(np.abs(body) * (1.0 + self._log_size(s + sig, T)))))
        return scale * (head + float(np.sum(body.real))), scale * mass

    def _contour(self, lnz: float, zeta: float):
        """Talbot value, error estimate and node count."""
        if not self._contour_ready:
            self._prepare_contour()
        T = math.log(self.radius) - lnz
        N = self.opts.contour_nodes
        v, mass = self._talbot(T, N)
        v2, _ = self._talbot(T, N + 6)
        # rounding in the node sum grows with the summed magnitudes
        err = abs(v - v2) + 1e-13 * abs(v) + 8 * _EPS * mass
        return v, err, N

    # -- endpoint -------------------------------------------------------
    def _endpoint_series(self, terms: int = 8) -> list:
        """Coefficients ``p_n`` with ``H ~ e^K sum p_n T^(mu-1+n) / Gamma(mu+n)``.

        ``T = log(radius / z)``.  They come from exponentiating the
        Stirling expansion of the Mellin transform in powers of ``1/s``.
        """
        if not self._contour_ready:
            self._prepare_contour()
        q = [0.0] * (terms + 1)
        for k, c in self._asy_coef:
            if k - 1 <= terms:
                q[k - 1] = c
        p = [1.0] + [0.0] * terms
        for n in range(1, terms + 1):
            p[n] = sum(j * q[j] * p[n - j] for j in range(1, n + 1)) / n
        return p

    def endpoint_constant(self) -> float:
        """Coefficient ``C`` of ``H ~ C (radius - z)^(mu - 1)`` at the endpoint."""
        if self._asym_c is None:
            if not self._contour_ready:
                self._prepare_contour()
            lg, sg = real_log_gamma(self.mu)
            self._asym_c = sg * math.exp(self._asy_const - lg
                                         - (self.mu - 1.0) * math.log(self.radius))
        return self._asym_c

    def _endpoint(self, lnz: float) -> EvalResult:
        T = math.log(self.radius) - lnz
        p = self._endpoint_series()
        total = 0.0
        last = 0.0
        big = 0.0
        for n, pn in enumerate(p):
            lg, sg = real_log_gamma(self.mu + n)
            arg = self._asy_const - lg + (self.mu - 1.0 + n) * math.log(T)
            term = 0.0 if sg == 0 else pn * sg * math.exp(arg)
            if n == 0:
                big = abs(arg)
            total += term
            last = term
        # exp amplifies the rounding of a large log argument
        err = 2.0 * abs(last) + 4 * _EPS * abs(total) * (1.0 + big + abs(self._asy_const))
        return EvalResult(total, err, len(p), "endpoint_asymptotic")

    # -- vectorised convenience ----------------------------------------
    def values(self, z=None, *, zeta=None) -> np.ndarray:
        """Kernel values on an array of points (``z`` or complements)."""
        pts = np.atleast_1d(np.asarray(zeta if zeta is not None else z, dtype=float))
        key = "zeta" if zeta is not None else "z"
        out = np.empty(pts.shape)
        for i, p in enumerate(pts.flat):
            out.flat[i] = self.evaluate(**{key: p}).value
        return out


@lru_cache(maxsize=256)
def _kernel_cached(spec: HKernelSpec, options: EvalOptions) -> HKernel:
    return HKernel(spec, options)


def get_kernel(spec, options: EvalOptions | None = None) -> HKernel:
    """Cached :class:`HKernel` for a spec."""
    if isinstance(spec, GKernelSpec):
        spec = spec.to_h()
    elif not isinstance(spec, HKernelSpec):
        spec = validate_h_spec(spec)
    return _kernel_cached(spec, options or DEFAULT_OPTIONS)


# ---------------------------------------------------------------- public ops


def eval_g_m0(spec: GKernelSpec, z: float, **kw) -> EvalResult:
    """Evaluate ``G^{m,0}_{m,m}[z | a; b]`` for ``0 < z < 1``.

    Examples
    --------
    >>> round(eval_g_m0(GKernelSpec([2.0], [0.0]), 0.5).value, 12)
    0.5
    """
    if not isinstance(spec, GKernelSpec):
        spec = GKernelSpec(*spec)
    z = float(z)
    if not 0.0 < z < 1.0:
        raise DomainError(f"z = {z!r} outside (0, 1)")
    return get_kernel(spec.to_h(), kw.pop("options", None)).evaluate(z, **kw)


def eval_h_m0(spec, z: float, **kw) -> EvalResult:
    """Evaluate a delta-neutral ``H^{m,0}_{m,m}`` kernel.

    Keyword arguments are passed to :meth:`HKernel.evaluate`
    (``zeta``, ``method``, ``tail_rel``, ``tail_abs``).
    """
    opts = kw.pop("options", None)
    return get_kernel(spec, opts).evaluate(z, **kw)


def evaluate_many(spec, zs: Sequence[float], *, threads: int | None = None,
                  options: EvalOptions | None = None) -> list:
    """Evaluate a kernel on many points, optionally in a thread pool."""
    ker = get_kernel(spec, options)
    zs = [float(z) for z in zs]
    n = threads if threads is not None else _thread_count()
    if n <= 1 or len(zs) < 64:
        return [ker.evaluate(z) for z in zs]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(ker.evaluate, zs))


def power_shift_check(spec: GKernelSpec, rho: float, z: float) -> float:
    """``|z^rho G(spec, z) - G(spec shifted by rho, z)|``."""
    if not isinstance(spec, GKernelSpec):
        spec = GKernelSpec(*spec)
    if rho == 0:
        return 0.0
    g = eval_g_m0(spec, z).value
    gs = eval_g_m0(spec.shifted(rho), z).value
    return abs(z ** rho * g - gs)


def mellin_multiplier(spec, s: float) -> float:
    """``prod_k Gamma(b_k + B_k s) / Gamma(a_k + A_k s)``.

    Raises
    ------
    PoleError
        If a numerator argument is a pole.
    DomainError
        If some ``b_k + B_k s <= 0`` (the defining integral diverges).
    """
    if isinstance(spec, GKernelSpec):
        spec = spec.to_h()
    num = [b + B * s for b, B in spec.lower]
    den = [a + A * s for a, A in spec.upper]
    value = gamma_ratio(GammaRatioSpec(num, den))
    if min(num) <= 0:
        raise DomainError("Mellin integral diverges: some b_k + B_k s <= 0")
    return value


def fit_endpoint_exponent(spec, endpoint: str, window: tuple, samples: int = 24,
                          options: EvalOptions | None = None) -> ExponentFit:
    """Fit the power-law exponent of the kernel near 0 or near the endpoint.

    Near zero the slope of ``log|H|`` against ``log z`` is fitted; near
    one the slope against ``log(radius - z)`` (which is ``log(1 - z)``
    when the radius is one).

    Parameters
    ----------
    spec : HKernelSpec
    endpoint : {"zero", "one"}
    window : (float, float)
        Range of ``z`` values, strictly inside ``(0, min(1, radius))``.
    samples : int
        Number of geometrically spaced points (at least 8).
    """
    ker = get_kernel(spec, options)
    lo, hi = float(window[0]), float(window[1])
    if samples < 8:
        raise SpecError("at least 8 samples required")
    if not (0.0 < lo < hi < min(1.0, ker.radius)):
        raise DomainError(f"window {window} not inside (0, {min(1.0, ker.radius):.6g})")
    if endpoint == "zero":
        xs = np.geomspace(lo, hi, samples)
        vals = np.array([ker.evaluate(x).value for x in xs])
    elif endpoint == "one":
        if ker.mu <= 0:
            raise DomainError("endpoint-one fit requires mu > 0")
        if ker.radius == 1.0:
            xs = np.geomspace(1.0 - hi, 1.0 - lo, samples)
            vals = np.array([ker.evaluate(zeta=d).value for d in xs])
        else:
            xs = np.geomspace(ker.radius - hi, ker.radius - lo, samples)
            vals = np.array([ker.evaluate(ker.radius - d).value for d in xs])
    else:
        raise SpecError(f"unknown endpoint {endpoint!r}")
    mag = np.abs(vals)
    if np.all(mag < 1e-300):
        raise DomainError("degenerate fit: kernel vanishes in the window")
    keep = mag >= 1e-300
    res = stats.linregress(np.log(xs[keep]), np.log(mag[keep]))
    r2 = float(min(1.0, max(0.0, res.rvalue ** 2)))
    return ExponentFit(endpoint, float(res.slope), r2, (lo, hi), int(keep.sum()),
                       float(res.intercept))


# ---------------------------------------------------------------- I/O


def load_kernel_spec(path) -> HKernelSpec:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SpecError(f"malformed JSON: {exc}") from exc
    return validate_h_spec(HKernelSpec.from_json(obj))


def dump_kernel_spec(spec: HKernelSpec, path=None) -> str:
    text = json.dumps(spec.to_json(), indent=2)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text


def write_trace_csv(rows: Iterable, path_or_fh) -> None:
    """Write ``(z, value, error, method)`` rows with 17 significant digits."""
    import csv

    own = isinstance(path_or_fh, (str, os.PathLike))
    fh = open(path_or_fh, "w", newline="") if own else path_or_fh
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["z", "value", "error", "method"])
        for z, r in rows:
            w.writerow(["%.17g" % z, "%.17g" % r.value, "%.17g" % r.abs_error_estimate, r.method])
    finally:
        if own:
            fh.close()


def read_trace_csv(path) -> list:
    import csv

    with open(path) as fh:
        rd = csv.DictReader(fh)
        return [(float(r["z"]), EvalResult(float(r["value"]), float(r["error"]), 0, r["method"]))
                for r in rd]
