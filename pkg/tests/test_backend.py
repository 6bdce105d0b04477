import os
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

import ekhardy
from ekhardy import _backend, _ddcore_py
from ekhardy.kernels import GKernelSpec, HKernel, HKernelSpec

try:
    from ekhardy import _ddcore
except ImportError:  # pragma: no cover - extension not built
    _ddcore = None

needs_compiled = pytest.mark.skipif(_ddcore is None, reason="compiled core not built")

finite = st.floats(-1e100, 1e100, allow_nan=False, allow_infinity=False)


@given(finite, finite)
@settings(max_examples=300)
def test_two_sum_is_exact(a, b):
    s, e = _ddcore_py.two_sum(a, b)
    assert Fraction(s) + Fraction(e) == Fraction(a) + Fraction(b)


@given(st.floats(-1e150, 1e150), st.floats(-1e150, 1e150))
@settings(max_examples=300)
def test_two_prod_is_exact(a, b):
    # Dekker splitting is exact only away from the subnormal range
    assume(a == 0 or b == 0 or abs(a * b) > 1e-290)
    p, e = _ddcore_py.two_prod(a, b)
    assert Fraction(p) + Fraction(e) == Fraction(a) * Fraction(b)


def test_dd_div_accuracy():
    qh, ql = _ddcore_py.dd_div(1.0, 0.0, 3.0, 0.0)
    err = Fraction(qh) + Fraction(ql) - Fraction(1, 3)
    assert abs(err) < Fraction(1, 10 ** 31)


def test_backend_flag():
    assert ekhardy.BACKEND in ("cython", "python")
    if _ddcore is not None and os.environ.get("EKH_PURE_PYTHON") is None:
        assert ekhardy.BACKEND == "cython"


def test_env_forces_fallback():
    env = dict(os.environ, EKH_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import ekhardy; print(ekhardy.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def _random_lattice(rng):
    k = rng.integers(1, 3)
    kappa = rng.integers(1, 4, size=k).astype(np.int64)
    nu = rng.integers(1, 4, size=k + 1).astype(np.int64)
    # match the slope sums so the series is delta-neutral
    nu[-1] = max(1, kappa.sum() + 1 - nu[:-1].sum())
    x0 = rng.uniform(-3, 3, size=k)
    y0 = rng.uniform(-3, 3, size=k + 1)
    return x0, kappa, y0, nu


@needs_compiled
def test_recurrence_bit_identical():
    rng = np.random.default_rng(2)
    for _ in range(20):
        x0, kappa, y0, nu = _random_lattice(rng)
        lo_x = x0 * 1e-17
        lo_y = y0 * 1e-17
        args = (400, x0, lo_x, kappa, y0, lo_y, nu, float(rng.uniform(0.5, 2)))
        a = _ddcore.recurrence_coeffs(*args)
        b = _ddcore_py.recurrence_coeffs(*args)
        assert a[2] == b[2]
        assert np.array_equal(np.asarray(a[0]), b[0], equal_nan=True)
        assert np.array_equal(np.asarray(a[1]), b[1], equal_nan=True)


@needs_compiled
def test_power_sum_bit_identical():
    rng = np.random.default_rng(3)
    for _ in range(30):
        n = 3000
        c_hi = rng.standard_normal(n) / np.arange(1, n + 1) ** rng.uniform(0, 2)
        c_lo = c_hi * 1e-17 * rng.standard_normal(n)
        w = float(rng.uniform(-0.99, 0.99))
        args = (c_hi, c_lo, n, w, w * 1e-17, abs(w), 1.0, 4, 8, 0.0, 1e-13)
        assert tuple(_ddcore.power_sum(*args)) == tuple(_ddcore_py.power_sum(*args))


@needs_compiled
def test_power_sum_many_matches_single():
    rng = np.random.default_rng(4)
    c_hi = rng.standard_normal(500) * 0.5 ** np.arange(500) * 0 + rng.standard_normal(500)
    c_lo = np.zeros(500)
    ws = rng.uniform(-0.9, 0.9, 7)
    res = np.asarray(_ddcore.power_sum_many(c_hi, c_lo, 500, ws, np.zeros(7), np.abs(ws),
                                            1.0, 4, 8, 0.0, 1e-13))
    for i, w in enumerate(ws):
        single = _ddcore_py.power_sum(c_hi, c_lo, 500, float(w), 0.0, abs(float(w)), 1.0, 4, 8,
                                      0.0, 1e-13)
        assert tuple(res[i]) == tuple(single)


@needs_compiled
@pytest.mark.parametrize("spec", [
    GKernelSpec((1.7, 2.9), (0.2, 0.45)).to_h(),
    HKernelSpec(((1.3, 1.0), (2.2, 2.0)), ((0.1, 1.0), (0.6, 2.0))),
    HKernelSpec(((2.1, 0.5), (1.9, 1.5)), ((0.3, 0.75), (0.2, 1.25))),
])
def test_kernel_values_identical_across_backends(spec, monkeypatch):
    top = min(1.0, spec.radius)
    zs = [0.05 * top, 0.4 * top, 0.8 * top, 0.97 * top]
    compiled = [HKernel(spec).evaluate(z, method="residue") for z in zs]
    monkeypatch.setattr(_backend, "recurrence_coeffs", _ddcore_py.recurrence_coeffs)
    monkeypatch.setattr(_backend, "power_sum", _ddcore_py.power_sum)
    monkeypatch.setattr(_backend, "power_sum_many", _ddcore_py.power_sum_many)
    python = [HKernel(spec).evaluate(z, method="residue") for z in zs]
    for a, b in zip(compiled, python):
        assert a.value == b.value
        assert a.terms_used == b.terms_used
