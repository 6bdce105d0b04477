"""Uniform grids and sampled functions."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SpecError


def _count(x_min, x_max, step) -> int:
    return int(round((x_max - x_min) / step)) + 1


@dataclass(frozen=True)
class Grid:
    """Uniform grid ``x_min + k * step`` for ``k = 0 .. n - 1``."""

    x_min: float
    x_max: float
    step: float

    def __post_init__(self):
        if not (self.step > 0 and math.isfinite(self.step)):
            raise SpecError("grid step must be positive")
        if not self.x_max > self.x_min:
            raise SpecError("grid needs x_max > x_min")

    @property
    def n(self) -> int:
        return _count(self.x_min, self.x_max, self.step)

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.step * np.arange(self.n)

    @classmethod
    def parse(cls, text: str) -> "Grid":
        """Parse ``"xmin,xmax,step"``."""
        try:
            a, b, h = (float(t) for t in text.split(","))
        except ValueError as exc:
            raise SpecError(f"grid must be 'xmin,xmax,step', got {text!r}") from exc
        return cls(a, b, h)

    def sample(self, f) -> "GridFunction":
        return GridFunction(self.x_min, self.x_max, self.step, np.asarray(f(self.x), dtype=float))


@dataclass
class GridFunction:
    """Samples of a real function on a uniform grid.

    Attributes
    ----------
    x_min, x_max, step : float
    samples : ndarray
        Length ``round((x_max - x_min) / step) + 1``.
    error_estimates : ndarray, optional
        Non-negative per-point error bounds (e.g. quadrature estimates).
    """

    x_min: float
    x_max: float
    step: float
    samples: np.ndarray
    error_estimates: np.ndarray | None = None

    def __post_init__(self):
        self.x_min = float(self.x_min)
        self.x_max = float(self.x_max)
        self.step = float(self.step)
        if not self.step > 0:
            raise SpecError("step must be positive")
        self.samples = np.asarray(self.samples, dtype=float)
        n = _count(self.x_min, self.x_max, self.step)
        if self.samples.shape != (n,):
            raise SpecError(f"expected {n} samples, got {self.samples.shape}")
        if self.error_estimates is not None:
            self.error_estimates = np.asarray(self.error_estimates, dtype=float)
            if self.error_estimates.shape != (n,) or np.any(self.error_estimates < 0):
                raise SpecError("error_estimates must be non-negative, one per sample")

    @property
    def grid(self) -> Grid:
        return Grid(self.x_min, self.x_max, self.step)

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.step * np.arange(len(self.samples))

    @property
    def n(self) -> int:
        return len(self.samples)

    def with_samples(self, samples, error_estimates=None) -> "GridFunction":
        return GridFunction(self.x_min, self.x_max, self.step, samples, error_estimates)

    def integral(self) -> float:
        """Trapezoid integral of the samples."""
        v = self.samples
        return self.step * (math.fsum(v) - 0.5 * (v[0] + v[-1]))

    def l1_norm(self) -> float:
        v = np.abs(self.samples)
        return self.step * (math.fsum(v) - 0.5 * (v[0] + v[-1]))

    def __call__(self, y):
        """Linear interpolation, zero outside the grid."""
        return np.interp(y, self.x, self.samples, left=0.0, right=0.0)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if self.error_estimates is None:
                w.writerow(["x", "value"])
                for x, v in zip(self.x, self.samples):
                    w.writerow([f"{x:.17g}", f"{v:.17g}"])
            else:
                w.writerow(["x", "value", "error_estimate"])
                for x, v, e in zip(self.x, self.samples, self.error_estimates):
                    w.writerow([f"{x:.17g}", f"{v:.17g}", f"{e:.17g}"])

    @classmethod
    def from_csv(cls, path) -> "GridFunction":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        if len(body) < 2 or header[:2] != ["x", "value"]:
            raise SpecError(f"{path}: not a grid-function CSV")
        xs = np.array([float(r[0]) for r in body])
        vals = np.array([float(r[1]) for r in body])
        errs = np.array([float(r[2]) for r in body]) if len(header) > 2 else None
        step = (xs[-1] - xs[0]) / (len(xs) - 1)
        if not np.allclose(np.diff(xs), step, rtol=1e-9, atol=0):
            raise SpecError(f"{path}: x column is not uniform")
        return cls(xs[0], xs[-1], step, vals, errs)


@dataclass
class PointValues:
    """Values at arbitrary points (returned when the caller's grid is not uniform)."""

    x: np.ndarray
    samples: np.ndarray
    error_estimates: np.ndarray = field(default=None)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "value", "error_estimate"])
            for x, v, e in zip(self.x, self.samples, self.error_estimates):
                w.writerow([f"{x:.17g}", f"{v:.17g}", f"{e:.17g}"])


def as_points(x_grid):
    """Normalise a grid argument to ``(points, (x_min, x_max, step) or None)``."""
    if isinstance(x_grid, (Grid, GridFunction)):
        return x_grid.x, (x_grid.x_min, x_grid.x_max, x_grid.step)
    xs = np.atleast_1d(np.asarray(x_grid, dtype=float))
    if xs.ndim != 1 or xs.size == 0:
        raise SpecError("x_grid must be a non-empty 1-D sequence")
    return xs, None
