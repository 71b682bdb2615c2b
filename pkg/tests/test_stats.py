"""Statistics: fits, KS, product checks, pushforward."""

import math

import numpy as np
import pytest

from orthocount import geom as G
from orthocount import perp as P
from orthocount import stats as ST


def test_exponential_fit_exact():
    t = np.linspace(1, 9, 12)
    lc, d, resid = ST.exponential_fit(t, 0.7 * np.exp(1.3 * t))
    assert lc == pytest.approx(math.log(0.7), abs=1e-10)
    assert d == pytest.approx(1.3, abs=1e-10)
    assert resid < 1e-10


def test_exponential_fit_constant_data():
    t = np.linspace(1, 5, 8)
    _, d, _ = ST.exponential_fit(t, np.full(8, 3.0))
    assert d == pytest.approx(0.0, abs=1e-12)


def test_exponential_fit_degenerate():
    with pytest.raises(ST.DegenerateData):
        ST.exponential_fit([1, 2, 3], [1, 2, 3])
    with pytest.raises(ST.DegenerateData):
        ST.exponential_fit([1, 2, 3, 4], [1, -1, 2, 3])


def test_ks_uniform_grid_and_degenerate():
    grid = (np.arange(1000) + 0.5) / 1000
    assert ST.ks_uniform(grid) <= 0.001
    assert ST.ks_uniform(np.full(50, 0.999)) >= 0.95
    assert ST.ks_uniform(np.full(50, 0.4)) >= 0.5
    with pytest.raises(ST.StatsError):
        ST.ks_uniform([])


def test_ks_permutation_invariant():
    rng = np.random.default_rng(0)
    x = rng.uniform(0, 1, 500)
    a = ST.ks_uniform(x)
    b = ST.ks_uniform(x[rng.permutation(500)])
    assert a == b and 0 <= a <= 1


def test_ks_farey_oracle():
    chunks = []
    for q in range(2, 501):
        a = np.arange(q)
        chunks.append(a[np.gcd(a, q) == 1] / q)
    farey = np.concatenate(chunks)
    assert ST.ks_uniform(farey) <= 0.01


def test_pair_product_independent_vs_correlated():
    rng = np.random.default_rng(1)
    for n, bound in [(2000, 0.12), (50000, 0.03)]:
        xm, xp = rng.uniform(0, 1, n), rng.uniform(0, 1, n)
        assert ST.pair_product_check(xm, xp) <= bound  # decreasing with n
    x = rng.uniform(0, 1, 20000)
    assert ST.pair_product_check(x, x) >= 0.5


def test_pair_product_exact_zero_for_rank_one():
    # histogram that is exactly a product: independent uniform grid points
    xm = np.repeat(np.linspace(0.05, 0.95, 8), 8)
    xp = np.tile(np.linspace(0.05, 0.95, 8), 8)
    assert ST.pair_product_check(xm, xp) <= 1e-12


def test_fundamental_cells_mass():
    m = ST.fundamental_cell_masses()
    assert len(m) == 65  # 64 cells + analytic cusp tail
    assert m.sum() == pytest.approx(1.0, abs=1e-12)
    assert m[-1] == pytest.approx((1 / 10) / (math.pi / 3), rel=1e-9)


def test_flow_pushforward(modular, cusp_family):
    tv0 = ST.flow_pushforward_check(cusp_family, modular, 0.0, 20000, seed=1)
    tv2 = ST.flow_pushforward_check(cusp_family, modular, 2.0, 20000, seed=1)
    tv8 = ST.flow_pushforward_check(cusp_family, modular, 8.0, 20000, seed=1)
    assert tv0 > 0.5
    assert tv8 < tv2 < tv0
    assert tv8 <= 0.1


def test_flow_pushforward_reproducible(modular, cusp_family):
    a = ST.flow_pushforward_check(cusp_family, modular, 4.0, 5000, seed=7)
    b = ST.flow_pushforward_check(cusp_family, modular, 4.0, 5000, seed=7)
    assert a == b


def test_flow_pushforward_requires_modular(schottky_sym, cusp_family):
    from orthocount.groups import NonModularGroup

    with pytest.raises(NonModularGroup):
        ST.flow_pushforward_check(cusp_family, schottky_sym, 1.0, 10)


def test_convergence_rate_synthetic():
    t = np.arange(4, 17, 2, dtype=float)
    ratios = 1 + np.exp(-0.5 * t)
    rep = ST.make_count_report(t, ratios * np.exp(t), np.exp(t))
    kappa = ST.convergence_rate(rep)
    assert kappa == pytest.approx(0.5, abs=0.05)


def test_convergence_rate_already_converged():
    t = np.arange(4, 10, 1, dtype=float)
    rep = ST.make_count_report(t, np.exp(t), np.exp(t))
    with pytest.raises(ST.RatiosAlreadyConverged):
        ST.convergence_rate(rep)


def test_modular_cusp_report_kappa_positive(modular, cusp_family):
    ts = [2 * math.log(Q) for Q in (20, 40, 80, 160, 320, 640)]
    spec = P.find_common_perpendiculars(cusp_family, cusp_family, modular, ts[-1] + 1e-9)
    Ns = [n for _, n in P.counting_function(spec, P.ZERO_POTENTIAL, [t + 1e-9 for t in ts])]
    preds = [(3 / math.pi ** 2) * math.exp(t) for t in ts]
    rep = ST.make_count_report(ts, Ns, preds)
    assert 0.97 <= rep.fitted_delta <= 1.03
    assert ST.convergence_rate(rep) > 0  # diagnostic only


def test_pair_sample_type():
    rng = np.random.default_rng(2)
    pairs = []
    for _ in range(500):
        xm, xp = rng.uniform(0, 1), rng.uniform(0, 1)
        vm = G.UnitTangent(G.Point(float(xm), 1.0), (0.0, -1.0))
        vp = G.UnitTangent(G.Point(float(xp), 1.0), (0.0, -1.0))
        pairs.append((vm, vp, 1.0))
    tv = ST.pair_product_check(ST.PairSample(pairs))
    assert 0 <= tv <= 0.3
