"""Catalog of test functions acted on by the operators.

Every function is vectorised, returns 0 outside its support and maps
``+-inf`` to the limit at infinity (0 for everything except bare powers).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SpecError

# integral of exp(-1/(1-y^2)) over (-1, 1)
BUMP_INTEGRAL = 0.4439938161680794


def bump(y):
    """C-infinity bump ``exp(-1/(1-y^2))`` on ``|y| < 1``."""
    y = np.asarray(y, dtype=float)
    inside = np.abs(y) < 1.0
    out = np.zeros(y.shape)
    yi = y[inside]
    out[inside] = np.exp(-1.0 / (1.0 - yi * yi))
    return out


@dataclass(frozen=True)
class TestFunction:
    """A member of the test-function catalog.

    Attributes
    ----------
    kind : {"power", "atom", "poisson_bump", "tabulated"}
    params : tuple
        Kind-specific parameters, see the constructors below.
    description : str
    """

    __test__ = False  # not a pytest class

    kind: str
    params: tuple
    description: str = ""

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        k = self.kind
        if k == "power":
            p, cutoff = self.params
            pos = (x > 0) & (x <= cutoff)
            out = np.zeros(x.shape)
            out[pos] = x[pos] ** p
            if p == 0:
                out[x == 0] = 1.0
            return out
        if k == "atom":
            c, w, kp, km = self.params
            h = 0.25 * w
            return kp * bump((x - c + h) / h) - km * bump((x - c - h) / h)
        if k == "poisson_bump":
            (t,) = self.params
            with np.errstate(over="ignore"):
                r = x / t
                return (1.0 / math.pi) * (1.0 / t) / (1.0 + r * r)
        if k == "tabulated":
            x0, step, values = self.params
            vals = np.asarray(values, dtype=float)
            xs = x0 + step * np.arange(len(vals))
            xe = np.where(np.isfinite(x), x, xs[-1] + 1.0)
            return np.interp(xe, xs, vals, left=0.0, right=0.0)
        raise SpecError(f"unknown test function kind {k!r}")

    # asymptotic information used to pick quadrature substitutions ------
    @property
    def zero_exponent(self) -> float:
        """``e`` with ``f(y) ~ |y|^e`` as ``y -> 0`` (inf if f vanishes near 0)."""
        if self.kind == "power":
            return self.params[0]
        if self.kind == "atom":
            c, w = self.params[:2]
            return math.inf if abs(c) > 0.5 * w else 0.0
        return 0.0

    @property
    def decay_exponent(self) -> float:
        """``q`` with ``f(y) ~ |y|^q`` as ``|y| -> inf`` (-inf for compact support)."""
        if self.kind == "power":
            p, cutoff = self.params
            return p if math.isinf(cutoff) else -math.inf
        if self.kind == "poisson_bump":
            return -2.0
        return -math.inf

    @property
    def support(self):
        if self.kind == "atom":
            c, w = self.params[:2]
            return (c - 0.5 * w, c + 0.5 * w)
        if self.kind == "power":
            return (0.0, self.params[1])
        if self.kind == "tabulated":
            x0, step, values = self.params
            return (x0, x0 + step * (len(values) - 1))
        return (-math.inf, math.inf)

    def to_json(self) -> dict:
        if self.kind == "power":
            p, cutoff = self.params
            return {"kind": "power", "p": p, "cutoff": None if math.isinf(cutoff) else cutoff}
        if self.kind == "atom":
            c, w, kp, km = self.params
            return {"kind": "atom", "center": c, "width": w, "scale": [kp, km]}
        if self.kind == "poisson_bump":
            return {"kind": "poisson_bump", "t": self.params[0]}
        x0, step, values = self.params
        return {"kind": "tabulated", "x_min": x0, "step": step, "values": list(values)}

    @classmethod
    def from_json(cls, obj, grid=None) -> "TestFunction":
        if isinstance(obj, str):
            obj = json.loads(obj)
        try:
            kind = obj["kind"]
            if kind == "power":
                cutoff = obj.get("cutoff")
                return power(float(obj["p"]), math.inf if cutoff is None else float(cutoff))
            if kind == "constant":
                return power(0.0, math.inf)
            if kind == "atom":
                if "scale" in obj:
                    kp, km = obj["scale"]
                    c, w = float(obj["center"]), float(obj["width"])
                    return TestFunction("atom", (c, w, float(kp), float(km)),
                                        f"atom(center={c}, width={w})")
                return atom(float(obj["center"]), float(obj["width"]), grid=grid)
            if kind == "poisson_bump":
                return poisson_bump(float(obj["t"]))
            if kind == "tabulated":
                return tabulated(float(obj["x_min"]), float(obj["step"]), obj["values"])
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecError(f"malformed test function: {exc}") from exc
        raise SpecError(f"unknown test function kind {obj.get('kind')!r}")


def power(p: float, cutoff: float = math.inf) -> TestFunction:
    """``x^p`` on ``0 < x <= cutoff`` and zero elsewhere."""
    if not cutoff > 0:
        raise SpecError("cutoff must be positive")
    return TestFunction("power", (float(p), float(cutoff)), f"x^{p} on (0, {cutoff}]")


def constant() -> TestFunction:
    """The function 1 on the positive half line."""
    return power(0.0, math.inf)


def _trapezoid(values, step):
    v = np.asarray(values, dtype=float)
    if len(v) < 2:
        return 0.0
    return step * (math.fsum(v) - 0.5 * (v[0] + v[-1]))


def atom(center: float, width: float, grid=None) -> TestFunction:
    """Mean-zero atom: a bump minus its copy shifted by ``width / 2``.

    The support is ``[center - width/2, center + width/2]``.  Without a
    grid the two lobes are normalised analytically to L1 mass 1/2 each;
    with a grid (anything with an ``x`` array and ``step``) they are
    normalised by the trapezoid rule on that grid, which makes the grid
    mean vanish and the grid L1 mass equal to one up to rounding.
    """
    if not width > 0:
        raise SpecError("atom width must be positive")
    h = 0.25 * width
    if grid is None:
        kp = km = 0.5 / (h * BUMP_INTEGRAL)
    else:
        x = np.asarray(grid.x, dtype=float)
        ip = _trapezoid(bump((x - center + h) / h), grid.step)
        im = _trapezoid(bump((x - center - h) / h), grid.step)
        if ip <= 0 or im <= 0:
            raise SpecError("atom not resolved on the grid")
        kp, km = 0.5 / ip, 0.5 / im
    return TestFunction("atom", (float(center), float(width), kp, km),
                        f"atom(center={center}, width={width})")


def poisson_bump(t: float) -> TestFunction:
    """Poisson kernel ``P_t`` as a test function (not mean zero)."""
    if not t > 0:
        raise SpecError("t must be positive")
    return TestFunction("poisson_bump", (float(t),), f"P_{t}")


def tabulated(x_min: float, step: float, values) -> TestFunction:
    """Piecewise-linear interpolant of samples, zero outside their range."""
    vals = tuple(float(v) for v in values)
    if step <= 0 or len(vals) < 2:
        raise SpecError("tabulated function needs step > 0 and >= 2 samples")
    return TestFunction("tabulated", (float(x_min), float(step), vals),
                        f"tabulated({len(vals)} samples)")
