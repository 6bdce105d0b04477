"""Compare the compiled double-double core with the pure-Python fallback.

Usage::

    python benchmarks/bench_core.py [--repeat 5] [--terms 2000]

The low-level kernels are timed directly on both modules.  End-to-end
kernel evaluation is timed in two subprocesses, one with
``EKH_PURE_PYTHON=1`` so the whole package runs on the fallback.
"""
import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from ekhardy import _ddcore_py

try:
    from ekhardy import _ddcore
except ImportError:
    _ddcore = None


def _args_recurrence(n):
    x0_hi, x0_lo, kappa = np.array([1.3, 2.45]), np.zeros(2), np.array([1, 1], dtype=np.int64)
    y0_hi, y0_lo, nu = np.array([0.2, 0.65]), np.zeros(2), np.array([1, 1], dtype=np.int64)
    return (n, x0_hi, x0_lo, kappa, y0_hi, y0_lo, nu, 1.0)


def bench_low_level(mod, n_terms, repeat):
    args = _args_recurrence(n_terms)
    t_rec = min(timeit.repeat(lambda: mod.recurrence_coeffs(*args), number=1, repeat=repeat))
    c_hi, c_lo, n_avail = mod.recurrence_coeffs(*args)
    # slowly converging sum so every coefficient is used
    ps = (c_hi, c_lo, n_avail, 0.999, 0.0, 0.999, 0.0, 8, 8, 0.0, 1e-300)
    t_sum = min(timeit.repeat(lambda: mod.power_sum(*ps), number=1, repeat=repeat))
    return {"recurrence_coeffs": t_rec, "power_sum": t_sum}


KERNEL_SNIPPET = """
import json, time
import numpy as np
from ekhardy import _backend
from ekhardy.kernels import GKernelSpec, HKernel, HKernelSpec
specs = [GKernelSpec([1.7, 2.9], [0.2, 0.45]).to_h(),
         HKernelSpec(((1.3, 1.0), (2.2, 2.0)), ((0.1, 1.0), (0.6, 2.0))),
         GKernelSpec([1.5, 2.7, 3.1], [0.3, 1.1, 0.85]).to_h()]
zs = np.linspace(0.01, 0.95, {points})
best = float("inf")
for _ in range({repeat}):
    # fresh kernels so the coefficient caches are rebuilt every round
    kers = [HKernel(s) for s in specs]
    t = time.perf_counter()
    for k in kers:
        for z in zs:
            k.evaluate(float(z), method="residue")
    best = min(best, time.perf_counter() - t)
print(json.dumps({{"backend": _backend.BACKEND, "seconds": best}}))
"""


def bench_kernel(pure: bool, points: int, repeat: int):
    env = dict(os.environ)
    if pure:
        env["EKH_PURE_PYTHON"] = "1"
    else:
        env.pop("EKH_PURE_PYTHON", None)
    code = KERNEL_SNIPPET.format(points=points, repeat=repeat)
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True)
    return json.loads(out.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--terms", type=int, default=2000)
    ap.add_argument("--points", type=int, default=200)
    args = ap.parse_args(argv)

    rows = []
    py = bench_low_level(_ddcore_py, args.terms, args.repeat)
    if _ddcore is None:
        print("compiled core not built; only the fallback is timed")
        cy = {k: float("nan") for k in py}
    else:
        cy = bench_low_level(_ddcore, args.terms, args.repeat)
    for name in py:
        rows.append((f"{name} ({args.terms} terms)", cy[name], py[name]))
    k_cy = bench_kernel(False, args.points, args.repeat)
    k_py = bench_kernel(True, args.points, args.repeat)
    rows.append((f"kernel evaluate (3 specs x {args.points} points)", k_cy["seconds"]
                 if k_cy["backend"] == "cython" else float("nan"), k_py["seconds"]))

    print(f"{'benchmark':45s} {'cython [s]':>12s} {'python [s]':>12s} {'speedup':>9s}")
    for name, c, p in rows:
        print(f"{name:45s} {c:12.6f} {p:12.6f} {p / c:8.1f}x")


if __name__ == "__main__":
    main()
