import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multitype_pa.graphcore import DegreeCensus, InitialConfig
from multitype_pa.models import BatchDistribution, ModelSpec, RateDistribution, grow
from multitype_pa.stats import (
    StatsError,
    compare,
    dirichlet_marginal_test,
    distribution_distance,
    ensemble_run,
    fit_tail_exponent,
)
from multitype_pa.theory import TheoryTable, ba_table, marginal_table_ba


def _census(entries, types=1, cap=10):
    total = sum(entries.values())
    return DegreeCensus(types, 0, total, cap, dict(entries), 0)


def test_compare_with_itself():
    c = grow(ModelSpec("ba", 2, batch=BatchDistribution.constant(2), seed=1), 2000).final.census
    rep = compare(c, c)
    assert (rep.sup_distance, rep.tv_partial) == (0.0, 0.0)


def test_compare_point_mass():
    c = _census({(3,): 10})
    t = TheoryTable("ba", {(3,): 0.5}, (1.0,))
    rep = compare(c, t)
    assert rep.sup_distance == 0.5
    assert rep.tv_partial == 0.25


def test_compare_shape_mismatch():
    c = _census({(1, 0): 4}, types=2)
    t = TheoryTable("ba", {(1,): 0.5}, (1.0,))
    with pytest.raises(StatsError):
        compare(c, t)


def test_compare_reports_overflow():
    c = DegreeCensus(1, 5, 10, 3, {(1,): 6, (2,): 2}, 2)
    rep = compare(c, TheoryTable("ba", {(1,): 0.6, (2,): 0.2, (3,): 0.0}, (1.0,)))
    assert rep.ignored_mass == pytest.approx(0.2)
    assert rep.sup_distance == pytest.approx(0.0, abs=1e-15)


def test_compare_classic_ba():
    spec = ModelSpec("ba", 1, batch=BatchDistribution.constant(1), seed=5)
    traj = grow(spec, 100_000, cap=20)
    rep = compare(traj.final.census, ba_table(spec.batch, (1.0,), 20))
    assert rep.sup_distance < 0.005


dists = st.dictionaries(st.integers(0, 20), st.floats(0, 1), max_size=15)


@given(dists, dists)
@settings(max_examples=100)
def test_distance_symmetric(p, q):
    assert distribution_distance(p, q) == distribution_distance(q, p)
    sup, tv = distribution_distance(p, q)
    assert sup >= 0 and tv >= 0


def test_fit_exact_power_law():
    pairs = [(l, l ** -3.0) for l in range(1, 200)]
    slope, _ = fit_tail_exponent(pairs, 10, 150)
    assert abs(slope + 3) < 1e-9


@given(st.floats(0.5, 6.0), st.floats(0.1, 100.0))
@settings(max_examples=50)
def test_fit_exact_on_synthetic_power_laws(gamma, c):
    pairs = [(l, c * l ** -gamma) for l in range(5, 60)]
    slope, _ = fit_tail_exponent(pairs, 5, 60)
    assert abs(slope + gamma) < 1e-9


def test_fit_theory_marginal():
    xs = marginal_table_ba(400, BatchDistribution.constant(1), 1.0)
    slope, _ = fit_tail_exponent(enumerate(xs), 100, 400)
    assert -3.05 <= slope <= -2.95


def test_fit_constant_values():
    slope, _ = fit_tail_exponent([(l, 0.25) for l in range(1, 30)], 1, 30)
    assert slope == pytest.approx(0.0, abs=1e-12)


def test_fit_errors():
    with pytest.raises(StatsError):
        fit_tail_exponent([(l, 1.0) for l in range(1, 6)], 1, 10)
    with pytest.raises(StatsError):
        fit_tail_exponent([(l, 1.0 if l != 7 else 0.0) for l in range(1, 30)], 1, 30)


def test_dirichlet_degenerate_sample():
    # every sample at 0.5 against a uniform marginal: the KS distance is exactly 1/2
    for stat, p in dirichlet_marginal_test([[0.5, 0.5]] * 100, [1, 1]):
        assert stat == pytest.approx(0.5)
        assert p < 1e-6


def _ks_stat(x, cdf):
    x = np.sort(x)
    n = len(x)
    F = cdf(x)
    i = np.arange(1, n + 1)
    return max(np.max(i / n - F), np.max(F - (i - 1) / n))


def test_dirichlet_beta_two_one():
    rng = np.random.default_rng(0)
    u = rng.random(400)
    samples = np.column_stack([np.sqrt(u), 1 - np.sqrt(u)])
    (s1, p1), (s2, p2) = dirichlet_marginal_test(samples, [2, 1])
    assert s1 == pytest.approx(_ks_stat(samples[:, 0], lambda t: t ** 2), abs=1e-12)
    assert s2 == pytest.approx(_ks_stat(samples[:, 1], lambda t: 1 - (1 - t) ** 2), abs=1e-12)
    assert p1 > 0.01 and p2 > 0.01


def test_dirichlet_needs_samples():
    with pytest.raises(StatsError):
        dirichlet_marginal_test([[0.5, 0.5]] * 10, [1, 1])


def _tree_spec(**kw):
    return ModelSpec("ba", 2, batch=BatchDistribution.constant(1),
                     initial=InitialConfig.path(2), **kw)


def test_single_replica_matches_grow():
    spec = _tree_spec(seed=8, steps=3000)
    res = ensemble_run(spec, 1)
    assert np.array_equal(res.results[0].zeta, grow(spec).final.zeta)


def test_ensemble_independent_of_parallelism():
    spec = ModelSpec("ie", 2, rate=RateDistribution.gamma(2.0, 1.0), seed=4, steps=1500)
    a = ensemble_run(spec, 12, parallelism=1, compare_dmax=6)
    b = ensemble_run(spec, 12, parallelism=8, compare_dmax=6)
    assert np.array_equal(a.zetas, b.zetas)
    assert [r.report.sup_distance for r in a.results] == [r.report.sup_distance for r in b.results]
    assert len({tuple(z) for z in a.zetas.tolist()}) == 12


def test_ensemble_martingale_mean():
    spec = _tree_spec(seed=30, steps=10_000)
    res = ensemble_run(spec, 200)
    assert res.replicas == 200
    assert np.allclose(res.zetas.sum(axis=1), 1.0)
    assert abs(res.mean_zeta[0] - 0.5) <= 0.05
    assert abs(res.mean_zeta[0] - 0.5) <= 3 * res.se_zeta[0]


def test_ensemble_exports(tmp_path):
    spec = _tree_spec(seed=2, steps=500)
    res = ensemble_run(spec, 3, compare_dmax=5)
    res.to_json(tmp_path / "e.json")
    data = json.loads((tmp_path / "e.json").read_text())
    assert data["summary"]["replicas"] == 3
    assert {"sup_distance", "tv_partial", "ignored_mass", "zeta", "seed"} <= set(data["replicas"][0])
    res.zeta_csv(tmp_path / "z.csv")
    lines = (tmp_path / "z.csv").read_text().splitlines()
    assert lines[0] == "replica,zeta_1,zeta_2" and len(lines) == 4


def test_ensemble_rejects_zero_replicas():
    with pytest.raises(StatsError):
        ensemble_run(_tree_spec(), 0)
