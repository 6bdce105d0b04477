"""Command-line front end ``ekh``.

Exit codes: 0 success, 2 invalid spec or input, 3 divergence,
4 quadrature / convergence failure.  Failures print a JSON object
``{"error": kind, "message": ..., "exit_code": n}`` on standard error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import EKHardyError, SpecError
from .functions import TestFunction
from .grid import Grid
from .hardy import DEFAULT_GRID, TGrid, make_atom, verify_bound_i, verify_bound_k
from .kernels import (HKernelSpec, fit_endpoint_exponent, get_kernel, validate_h_spec,
                      write_trace_csv)
from .operators import (IOperatorSpec, KOperatorSpec, apply_i, apply_k, hausdorff_admissibility,
                        hausdorff_kernel_from_i, hausdorff_kernel_from_k, ho_constant_c1,
                        ho_constant_c2, kernel_norm_k1, kernel_norm_k2, load_operator_spec,
                        piecewise_power_kernel)
from .quadrature import DEFAULT_QUAD, QuadratureOptions

COMMANDS = ("eval-kernel", "kernel-norm", "apply-op", "fit-exponent", "verify-bound",
            "hausdorff-check")
DEFAULT_Z_GRID = Grid(0.01, 0.99, 0.01)


@dataclass
class RunConfig:
    """Everything one CLI invocation needs."""

    command: str
    spec_path: str
    output_path: str | None = None
    grid: Grid | None = None
    tgrid: TGrid | None = None
    quadrature: QuadratureOptions = DEFAULT_QUAD
    seed: int | None = None
    function: str | None = None
    endpoint: str = "zero"
    window: tuple | None = None
    samples: int = 24


# ---------------------------------------------------------------- output


def _num(x):
    if isinstance(x, bool) or x is None:
        return json.dumps(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if not math.isfinite(x):
        return "null"
    return "%.17g" % x


def dumps(obj, indent: int = 0) -> str:
    """JSON with every float written to 17 significant digits."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(dumps(v, indent + 1) for v in obj) + "]"
    if isinstance(obj, str):
        return json.dumps(obj)
    return _num(obj)


def _emit(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _emit_json(obj, path):
    _emit(dumps(obj) + "\n", path)


# ---------------------------------------------------------------- inputs


def _load_json(path: str):
    try:
        if path == "-":
            return json.load(sys.stdin)
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SpecError(f"malformed JSON in {path}: {exc}") from exc
    except OSError as exc:
        raise SpecError(f"cannot read {path}: {exc.strerror}") from exc


def _operator(obj):
    return load_operator_spec(obj.get("operator", obj))


def _function(cfg: RunConfig, obj, grid) -> TestFunction:
    raw = obj.get("function") if isinstance(obj, dict) else None
    if cfg.function is not None:
        text = cfg.function
        raw = json.loads(text) if text.lstrip().startswith("{") else _load_json(text)
    if raw is None:
        return make_atom(0.0, 1.0, grid=grid)
    return TestFunction.from_json(raw, grid=grid)


def _grid(cfg: RunConfig, default: Grid) -> Grid:
    return cfg.grid or default


# ---------------------------------------------------------------- commands


def _eval_kernel(cfg: RunConfig, obj) -> None:
    spec = validate_h_spec(obj.get("kernel", obj))
    ker = get_kernel(spec)
    zs = _grid(cfg, DEFAULT_Z_GRID).x
    zs = zs[(zs > 0) & (zs < min(1.0, ker.radius))]
    if zs.size == 0:
        raise SpecError("no grid points inside the kernel domain")
    rows = [(float(z), ker.evaluate(float(z))) for z in zs]
    if cfg.output_path is None or cfg.output_path == "-":
        write_trace_csv(rows, sys.stdout)
    else:
        write_trace_csv(rows, cfg.output_path)


def _kernel_norm(cfg: RunConfig, obj) -> None:
    inner = obj.get("operator", obj)
    opts = cfg.quadrature
    if "gamma" in inner and "lambda" not in inner:
        beta = inner["beta"]
        if isinstance(beta, (list, tuple)):
            raise SpecError("Ho constants take a scalar beta")
        out = {"c1": ho_constant_c1(beta, inner["gamma"], inner["delta"], opts),
               "c2": ho_constant_c2(beta, inner["gamma"], inner["delta"], opts)}
    else:
        spec = load_operator_spec(inner)
        if isinstance(spec, IOperatorSpec):
            out = {"k1": kernel_norm_k1(spec, opts)}
        else:
            out = {"k2": kernel_norm_k2(spec, opts)}
    _emit_json(out, cfg.output_path)


def _apply_op(cfg: RunConfig, obj) -> None:
    spec = _operator(obj)
    grid = _grid(cfg, DEFAULT_GRID)
    f = _function(cfg, obj, grid)
    res = (apply_i if isinstance(spec, IOperatorSpec) else apply_k)(spec, f, grid, cfg.quadrature)
    lines = ["x,value,error_estimate"]
    lines += ["%.17g,%.17g,%.17g" % t for t in zip(grid.x, res.samples, res.error_estimates)]
    _emit("\n".join(lines) + "\n", cfg.output_path)


def _fit_exponent(cfg: RunConfig, obj) -> None:
    spec = validate_h_spec(obj.get("kernel", obj))
    window = cfg.window
    if window is None:
        top = min(1.0, spec.radius)
        window = (1e-6, 1e-3) if cfg.endpoint == "zero" else (top - 1e-3, top - 1e-6)
    fit = fit_endpoint_exponent(spec, cfg.endpoint, window, cfg.samples)
    expected = spec.rho_star if cfg.endpoint == "zero" else spec.mu - 1.0
    _emit_json({"endpoint": fit.endpoint, "fitted_exponent": fit.fitted_exponent,
                "expected_exponent": expected, "r_squared": fit.r_squared,
                "window": list(fit.window), "sample_count": fit.sample_count}, cfg.output_path)


def _verify_bound(cfg: RunConfig, obj) -> None:
    spec = _operator(obj)
    grid = _grid(cfg, DEFAULT_GRID)
    f = _function(cfg, obj, grid)
    check = verify_bound_i if isinstance(spec, IOperatorSpec) else verify_bound_k
    report = check(spec, f, grid, cfg.tgrid, cfg.quadrature)
    _emit_json(report.to_json(), cfg.output_path)


def _hausdorff(cfg: RunConfig, obj) -> None:
    breaks = ()
    if "piecewise_power" in obj:
        pieces = obj["piecewise_power"]
        phi = piecewise_power_kernel(pieces)
        breaks = sorted({float(p[i]) for p in pieces for i in (0, 1)} - {0.0, math.inf})
    else:
        spec = _operator(obj)
        phi = (hausdorff_kernel_from_i if isinstance(spec, IOperatorSpec)
               else hausdorff_kernel_from_k)(spec)
        breaks = (1.0,)
    report = hausdorff_admissibility(phi, cfg.quadrature, breakpoints=breaks)
    _emit_json(report.to_json(), cfg.output_path)


_HANDLERS = {
    "eval-kernel": _eval_kernel,
    "kernel-norm": _kernel_norm,
    "apply-op": _apply_op,
    "fit-exponent": _fit_exponent,
    "verify-bound": _verify_bound,
    "hausdorff-check": _hausdorff,
}


def run(cfg: RunConfig) -> int:
    """Execute one command; returns the process exit status."""
    try:
        obj = _load_json(cfg.spec_path)
        if not isinstance(obj, dict):
            raise SpecError("spec must be a JSON object")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            _HANDLERS[cfg.command](cfg, obj)
    except EKHardyError as exc:
        return _fail(exc.kind, str(exc), exc.exit_code)
    except (KeyError, TypeError, ValueError) as exc:
        return _fail("invalid_spec", f"{type(exc).__name__}: {exc}", 2)
    return 0


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code}) + "\n")
    return code


# ---------------------------------------------------------------- argparse


def _pair(text: str) -> tuple:
    try:
        a, b = (float(t) for t in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected 'lo,hi', got {text!r}") from exc
    return a, b


def _grid_arg(text):
    try:
        return Grid.parse(text)
    except SpecError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _tgrid_arg(text):
    try:
        return TGrid.parse(text)
    except SpecError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ekh", description="Delta-neutral H kernels, Erdelyi-Kober operators and H^1 checks.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--spec", required=True, help="JSON spec file ('-' for stdin)")
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.add_argument("--grid", type=_grid_arg, default=None, help="xmin,xmax,step")
    p.add_argument("--tgrid", type=_tgrid_arg, default=None, help="tmin,tmax,count")
    p.add_argument("--rel-tol", type=float, default=DEFAULT_QUAD.rel_tol)
    p.add_argument("--abs-tol", type=float, default=DEFAULT_QUAD.abs_tol)
    p.add_argument("--seed", type=int, default=None,
                   help="recorded for reproducibility; all commands are deterministic")
    p.add_argument("--function", default=None,
                   help="test function as inline JSON or a JSON file (default: atom(0, 1))")
    p.add_argument("--endpoint", choices=("zero", "one"), default="zero")
    p.add_argument("--window", type=_pair, default=None, help="lo,hi for fit-exponent")
    p.add_argument("--samples", type=int, default=24)
    return p


def config_from_args(args) -> RunConfig:
    try:
        quad = replace(DEFAULT_QUAD, rel_tol=args.rel_tol, abs_tol=args.abs_tol)
    except ValueError as exc:
        raise SpecError(str(exc)) from exc
    return RunConfig(args.command, args.spec, args.out, args.grid, args.tgrid, quad, args.seed,
                     args.function, args.endpoint, args.window, args.samples)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except SpecError as exc:
        return _fail(exc.kind, str(exc), exc.exit_code)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
