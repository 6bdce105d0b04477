import io
import json
import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ekhardy.errors import DomainError, SpecError
from ekhardy.functions import poisson_bump
from ekhardy.grid import Grid, GridFunction
from ekhardy.hardy import (DEFAULT_GRID, INV_PI, BoundCheckReport, TGrid, dilate,
                           dilation_commutation_check, h1_norm, hat_weights, make_atom,
                           maximal_function, poisson_bound, poisson_convolve, poisson_kernel,
                           sample, verify_bound_i, verify_bound_k)
from ekhardy.operators import IOperatorSpec, KOperatorSpec

import oracles

SMALL = Grid(-20.0, 20.0, 0.01)


def _p1(grid=DEFAULT_GRID):
    return sample(poisson_bump(1.0), grid)


# ---------------------------------------------------------------- Poisson kernel


def test_poisson_examples():
    assert poisson_kernel(1.0, 0.0) == pytest.approx(0.3183099, abs=1e-7)
    assert poisson_kernel(1.0, 0.0) == INV_PI
    assert poisson_kernel(2.0, 0.0) == pytest.approx(1 / (2 * math.pi), rel=1e-15)
    assert poisson_kernel(0.7, 1.3) == pytest.approx(oracles.poisson(0.7, 1.3), rel=1e-14)
    with pytest.raises(DomainError):
        poisson_kernel(0.0, 1.0)
    with pytest.raises(DomainError):
        poisson_kernel(-1.0, 1.0)


@pytest.mark.parametrize("t", [0.01, 1.0, 37.0])
def test_poisson_mass(t):
    x = np.linspace(-1e4 * t, 1e4 * t, 2_000_001)
    mass = oracles.trapezoid(poisson_kernel(t, x), x[1] - x[0])
    assert abs(mass - 1.0) <= 1e-4


def test_poisson_bound_on_sample():
    rng = np.random.default_rng(0)
    t = 10.0 ** rng.uniform(-6, 6, 10_000)
    x = rng.standard_normal(10_000) * 10.0 ** rng.uniform(-8, 8, 10_000)
    x[:100] = 0.0
    vals = np.array([poisson_kernel(ti, xi) for ti, xi in zip(t, x)])
    bounds = np.array([poisson_bound(ti) for ti in t])
    assert int(np.sum(vals > bounds)) == 0


@given(st.floats(1e-300, 1e300), st.floats(-1e300, 1e300))
@settings(max_examples=500)
def test_poisson_bound_property(t, x):
    assert poisson_kernel(t, x) <= poisson_bound(t)


def test_hat_weights_sum_to_mass():
    # the hat functions form a partition of unity
    h = 0.01
    offs = h * np.arange(-200000, 200001)
    for t in (0.002, 0.01, 0.05):
        w = hat_weights(t, h, offs)
        assert np.all(w > 0)
        assert abs(w.sum() - 1.0) < 1e-4


# ---------------------------------------------------------------- convolution


def test_convolve_zero():
    z = GridFunction(-5, 5, 0.01, np.zeros(1001))
    assert not np.any(poisson_convolve(z, 1.0).samples)
    assert not np.any(maximal_function(z).samples)
    assert h1_norm(z) == 0.0


def test_convolve_semigroup():
    out = poisson_convolve(_p1(), 1.0)
    ref = poisson_kernel(2.0, DEFAULT_GRID.x)
    assert np.max(np.abs(out.samples - ref)) <= 2e-3


def test_convolve_matches_direct_sum():
    g = Grid(-3.0, 3.0, 0.05)
    f = sample(make_atom(0.4, 1.0, g), g)
    for t in (0.3, 2.0):
        out = poisson_convolve(f, t).samples
        w = np.full(g.n, g.step)
        w[[0, -1]] *= 0.5
        direct = np.array([np.sum(w * f.samples * oracles.poisson(t, x - g.x)) for x in g.x])
        assert np.max(np.abs(out - direct)) <= 1e-13


def test_convolve_narrow_atom_bound():
    f = sample(make_atom(0.0, 0.2), DEFAULT_GRID)
    for t in (5.0, 50.0, 400.0):
        vals = poisson_convolve(f, t).samples
        assert np.max(np.abs(vals)) <= poisson_bound(t) * f.l1_norm()


def test_convolve_rejects_tiny_t():
    with pytest.raises(DomainError):
        poisson_convolve(_p1(SMALL), 0.0009)


# ---------------------------------------------------------------- maximal function


def test_maximal_at_zero_for_p1():
    mf = maximal_function(_p1(), TGrid(0.01, 100.0, 64))
    i0 = int(np.argmin(np.abs(DEFAULT_GRID.x)))
    # sup over t >= t_min of P_{1+t}(0)
    assert abs(mf.samples[i0] - 1.0 / (math.pi * 1.01)) <= 2e-3
    fine = maximal_function(_p1(), TGrid(0.001, 100.0, 64))
    assert abs(fine.samples[i0] - 1.0 / math.pi) <= 2e-3


def test_maximal_monotone_under_refinement():
    f = sample(make_atom(1.0, 2.0, SMALL), SMALL)
    tg = TGrid(0.01, 200.0, 16)
    finer = SimpleNamespace(t=np.union1d(tg.t, TGrid(0.013, 150.0, 23).t))
    a = maximal_function(f, tg).samples
    b = maximal_function(f, finer).samples
    assert np.all(b >= a)


def test_maximal_dominates_f():
    f = sample(make_atom(0.0, 2.0, SMALL), SMALL)
    gaps = []
    for t_min in (0.16, 0.04, 0.01):
        mf = maximal_function(f, TGrid(t_min, 200.0, 64)).samples
        gaps.append(float(np.max(np.abs(f.samples) - mf)))
    assert gaps[-1] <= gaps[0]
    assert gaps[-1] <= 0.05 * np.max(np.abs(f.samples))


def test_h1_dominates_l1():
    f = sample(make_atom(0.0, 2.0, SMALL), SMALL)
    assert h1_norm(f, TGrid(SMALL.step, 200.0, 64)) >= f.l1_norm() - 1e-2


# ---------------------------------------------------------------- H^1 norm


def test_negative_control_grows_with_width():
    norms = []
    for L in (12.5, 25.0, 50.0):
        g = Grid(-L, L, 0.02)
        norms.append(h1_norm(sample(poisson_bump(1.0), g), TGrid(0.02, 1000.0, 64)))
    assert norms[0] < norms[1] < norms[2]
    # log growth: each doubling adds about (2/pi) log 2
    assert norms[2] - norms[1] > 0.5 * (2 / math.pi) * math.log(2)


def test_atom_norm_stable():
    g1 = Grid(-25.0, 25.0, 0.01)
    g2 = Grid(-50.0, 50.0, 0.01)
    a1 = h1_norm(sample(make_atom(0.0, 1.0, g1), g1), TGrid(0.01, 250.0, 64))
    a2 = h1_norm(sample(make_atom(0.0, 1.0, g2), g2), TGrid(0.01, 500.0, 64))
    a3 = h1_norm(sample(make_atom(0.0, 1.0, g2), g2), TGrid(0.01, 500.0, 128))
    assert abs(a2 - a1) <= 0.02 * a2
    assert abs(a3 - a2) <= 0.02 * a2


# ---------------------------------------------------------------- atoms


@pytest.mark.parametrize("center,width", [(0.0, 1.0), (3.3, 0.37), (-7.0, 5.0)])
def test_atom_normalisation(center, width):
    f = sample(make_atom(center, width), DEFAULT_GRID)
    assert abs(f.integral()) <= 1e-12
    assert abs(f.l1_norm() - 1.0) <= 1e-10


def test_atom_translation_invariance():
    g0 = DEFAULT_GRID
    g5 = Grid(g0.x_min + 5.0, g0.x_max + 5.0, g0.step)
    n0 = h1_norm(sample(make_atom(0.0, 1.0, g0), g0))
    n5 = h1_norm(sample(make_atom(5.0, 1.0, g5), g5), TGrid.default_for(g0))
    assert abs(n0 - n5) <= 1e-6 * n0
    # same grid: the truncation sees the atom 5 units closer to one edge
    same = h1_norm(sample(make_atom(5.0, 1.0, g0), g0))
    assert abs(n0 - same) <= 1e-3 * n0


# ---------------------------------------------------------------- dilation


def test_dilation_identity_exact():
    f = sample(make_atom(0.0, 1.0, SMALL), SMALL)
    assert dilation_commutation_check(f, 1.0) == 0.0


def test_dilate_values():
    f = sample(make_atom(0.0, 2.0, SMALL), SMALL)
    d = dilate(f, 2.0)
    assert d.samples[SMALL.n // 2 + 40] == pytest.approx(f.samples[SMALL.n // 2 + 20], rel=1e-12)
    with pytest.raises(DomainError):
        dilate(f, 0.0)


@pytest.mark.parametrize("lam", [2.0, 0.5, 4.0, 0.25])
def test_dilation_commutes(lam):
    g = DEFAULT_GRID
    f = sample(make_atom(0.0, 1.0, g), g)
    tg = TGrid(0.05, 500.0, 64)
    bound = 5e-3 * (1.0 + float(np.max(maximal_function(f, tg).samples)))
    assert dilation_commutation_check(f, lam, tg) <= bound


def test_dilation_refinement_ratio():
    tg = TGrid(0.05, 200.0, 64)
    errs = []
    for step in (0.02, 0.01, 0.005):
        g = Grid(-20.0, 20.0, step)
        f = sample(make_atom(0.0, 1.0, g), g)
        errs.append(dilation_commutation_check(f, 2.0, tg))
    assert errs[1] / errs[0] <= 0.6
    assert errs[2] / errs[1] <= 0.6


# ---------------------------------------------------------------- bound checks


def _small_tg():
    return TGrid(SMALL.step, 200.0, 64)


def test_verify_identity():
    spec = IOperatorSpec([0.5], [0.0], [2.0], [2.0])
    rep = verify_bound_i(spec, make_atom(0.0, 1.0, SMALL), SMALL, _small_tg())
    assert rep.passed is True and rep.ratio == 1.0
    assert "identity" in rep.notes
    rep = verify_bound_k(KOperatorSpec([0.5], [0.0], [2.0], [2.0]), make_atom(0.0, 1.0, SMALL),
                         SMALL, _small_tg())
    assert rep.passed is True and rep.ratio == 1.0


def test_verify_i_atom():
    f = make_atom(1.0, 1.0, SMALL)
    rep = verify_bound_i(IOperatorSpec([1.0], [1.0], [1.0], [1.0]), f, SMALL, _small_tg())
    assert rep.passed is True
    assert rep.ratio <= 1 + 1e-3
    assert rep.constant_used == pytest.approx(1.0, rel=1e-9)
    assert rep.ratio == pytest.approx(rep.lhs / rep.rhs, rel=1e-15)


def test_verify_k_atom():
    f = make_atom(1.0, 1.0, SMALL)
    rep = verify_bound_k(KOperatorSpec([1.0], [1.0], [1.0], [1.0]), f, SMALL, _small_tg())
    assert rep.passed is True
    assert rep.ratio <= 1 + 1e-3
    assert rep.constant_used == pytest.approx(0.5, rel=1e-9)


def test_verify_not_applicable():
    f = make_atom(1.0, 1.0, SMALL)
    rep = verify_bound_i(IOperatorSpec([0.0], [1.0], [1.0], [1.0]), f, SMALL, _small_tg())
    assert rep.passed is None
    assert "k1 divergent; theorem inapplicable" in rep.notes
    rep = verify_bound_k(KOperatorSpec([-1.0], [1.0], [1.0], [1.0]), f, SMALL, _small_tg())
    assert rep.passed is None
    assert "k2 divergent; theorem inapplicable" in rep.notes


def test_report_json_round_trip():
    rep = BoundCheckReport(0.5, 1.0, 0.5, 2.0, True, "x")
    obj = json.loads(rep.dumps())
    assert set(obj) >= {"lhs", "rhs", "ratio", "constant_used", "pass", "notes"}
    assert BoundCheckReport.from_json(obj) == rep
    bad = BoundCheckReport(math.nan, math.inf, math.nan, math.inf, None, "divergent")
    obj = json.loads(bad.dumps())
    assert obj["pass"] is None and obj["lhs"] is None
    back = BoundCheckReport.from_json(obj)
    assert back.passed is None and math.isnan(back.ratio)


# ---------------------------------------------------------------- grids


def test_grid_function_length_checked():
    with pytest.raises(SpecError):
        GridFunction(0.0, 1.0, 0.1, np.zeros(10))
    assert GridFunction(0.0, 1.0, 0.1, np.zeros(11)).n == 11


def test_grid_function_csv_round_trip(tmp_path):
    g = Grid(-1.0, 1.0, 0.25)
    f = GridFunction(g.x_min, g.x_max, g.step, np.sin(g.x), np.full(g.n, 1e-9))
    path = tmp_path / "f.csv"
    f.to_csv(path)
    back = GridFunction.from_csv(path)
    assert np.array_equal(back.samples, f.samples)
    assert np.array_equal(back.error_estimates, f.error_estimates)
    assert back.step == pytest.approx(f.step, rel=1e-15)


def test_tgrid_validation():
    with pytest.raises(SpecError):
        TGrid(1.0, 0.5)
    with pytest.raises(SpecError):
        TGrid(0.1, 1.0, 1)
    assert TGrid.parse("0.1,10,5").t[-1] == pytest.approx(10.0)
    d = TGrid.default_for(DEFAULT_GRID)
    assert (d.t_min, d.t_max, d.count) == (0.01, 500.0, 64)
