import math

import numpy as np
import pytest

from multitype_pa.graphcore import InitialConfig, init_graph
from multitype_pa.models import (
    BatchDistribution,
    ModelError,
    ModelSpec,
    RateDistribution,
    ba_step,
    grow,
    ie_step,
    probe_assumptions,
    sample_batch,
)
from multitype_pa.rng import RandomStream
from multitype_pa.theory import ba_newborn_prob


def test_constant_batch():
    s = RandomStream(1)
    assert {sample_batch(BatchDistribution.constant(3), s) for _ in range(100)} == {3}


def test_categorical_batch_mean():
    s = RandomStream(2)
    dist = BatchDistribution.categorical({1: 0.5, 2: 0.5})
    draws = [sample_batch(dist, s) for _ in range(100_000)]
    assert set(draws) == {1, 2}
    assert abs(np.mean(draws) - 1.5) < 0.01


def test_categorical_pmf_must_sum_to_one():
    with pytest.raises(ModelError):
        BatchDistribution.categorical({1: 0.5, 2: 0.4})


def test_batch_support_positive():
    with pytest.raises(ModelError):
        BatchDistribution.categorical({0: 0.5, 2: 0.5})


def test_shifted_poisson_batch():
    dist = BatchDistribution.shifted_poisson(1.5)
    assert min(dist.values) == 1
    assert math.fsum(dist.probs) == pytest.approx(1.0, abs=1e-12)
    assert dist.mean == pytest.approx(2.5, abs=1e-9)
    # pmf ratio of neighbours follows the Poisson law
    assert dist.prob(3) / dist.prob(2) == pytest.approx(1.5 / 2)


def test_rate_distribution_moments():
    g = RateDistribution.gamma(2.0, 0.5)
    assert (g.mean, g.variance) == (1.0, 0.5)
    u = RateDistribution.uniform(1.0, 3.0)
    assert u.mean == 2.0 and u.variance == pytest.approx(1 / 3)
    with pytest.raises(ModelError):
        RateDistribution.uniform(0.0, 1.0)


def test_spec_kind_mismatch():
    with pytest.raises(ModelError):
        ModelSpec("ba", 1, rate=RateDistribution.constant(1), batch=BatchDistribution.constant(1))
    with pytest.raises(ModelError):
        ModelSpec("ie", 1)


def _single_type_first_graph():
    # two types, but every edge touching vertices 0..2 is type 0 except a far-away type-1 edge
    return init_graph(InitialConfig(2, 5, ((0, 1, 0), (1, 2, 0), (3, 4, 1))))


def test_ba_types_follow_endpoint():
    g = _single_type_first_graph()
    s = RandomStream(3)
    for _ in range(2000):
        for w, k in ba_step(g, 2, s):
            assert k == (1 if w in (3, 4) else 0)


def test_ba_step_single_edge():
    g = init_graph(InitialConfig.default(2))
    assert len(ba_step(g, 1, RandomStream(0))) == 1
    assert len(ba_step(g, 7, RandomStream(0))) == 7


def test_ba_type_frequencies_symmetric():
    g = init_graph(InitialConfig.default(2))
    s = RandomStream(4)
    types = [ba_step(g, 1, s)[0][1] for _ in range(100_000)]
    assert abs(np.mean(types) - 0.5) < 0.01


def test_ba_step_is_frozen_and_deterministic():
    spec = ModelSpec("ba", 2, batch=BatchDistribution.constant(3), seed=9)
    g = grow(spec, 200).graph
    before = (g.copy().degrees, list(g.endpoints))
    b1 = ba_step(g, 5, RandomStream(77))
    b2 = ba_step(g, 5, RandomStream(77))
    assert b1 == b2
    assert (g.degrees, list(g.endpoints)) == before


def test_ie_tiny_rate_mostly_empty():
    g = init_graph(InitialConfig.default(2))
    s = RandomStream(5)
    empty = sum(not ie_step(g, 1e-6, s) for _ in range(100_000))
    assert empty / 100_000 >= 0.999


def test_ie_types_follow_endpoint_array():
    g = init_graph(InitialConfig.default(1))
    s = RandomStream(6)
    for _ in range(1000):
        assert all(k == 0 for _, k in ie_step(g, 3.0, s))


def test_ie_means():
    g = init_graph(InitialConfig.default(2))
    s = RandomStream(7)
    counts = np.zeros((100_000, 2))
    for i in range(100_000):
        for _, k in ie_step(g, 2.0, s):
            counts[i, k] += 1
    assert abs(counts.sum(axis=1).mean() - 2) < 0.02
    assert np.all(np.abs(counts.mean(axis=0) - 1) < 0.02)


def test_ba_tree_edge_count_exact():
    spec = ModelSpec("ba", 1, batch=BatchDistribution.constant(1),
                     initial=InitialConfig(1, 2, ((0, 1, 0),)))
    traj = grow(spec, 1000)
    assert traj.graph.num_edges == 1001
    traj.graph.check_invariants()


def test_ie_edge_count_near_mu():
    spec = ModelSpec("ie", 2, rate=RateDistribution.constant(1.0), seed=11)
    traj = grow(spec, 10_000)
    assert 0.9 <= traj.edges_per_step <= 1.1


def test_grow_reproducible():
    spec = ModelSpec("ie", 2, rate=RateDistribution.gamma(2.0, 1.0), seed=12,
                     census_schedule=(10, 100))
    a, b = grow(spec, 500), grow(spec, 500)
    assert [s.step for s in a.snapshots] == [10, 100, 500]
    for x, y in zip(a.snapshots, b.snapshots):
        assert x.census.entries == y.census.entries
        assert np.array_equal(x.zeta, y.zeta)
    assert a.graph.degrees == b.graph.degrees
    c = grow(spec, 500, replica=1)
    assert c.graph.degrees != a.graph.degrees


def test_batch_schedule_hook():
    spec = ModelSpec("ba", 1, batch_schedule=lambda n: 1 + n % 3)
    traj = grow(spec, 30)
    assert traj.graph.num_edges == 1 + sum(1 + n % 3 for n in range(1, 31))


def _zeta_after(g, bundle):
    counts = np.array(g.edge_type_counts, dtype=float)
    for _, k in bundle:
        counts[k] += 1
    return counts / counts.sum()


@pytest.mark.parametrize("kind", ["ba", "ie"])
def test_one_step_martingale(kind):
    if kind == "ba":
        spec = ModelSpec("ba", 3, batch=BatchDistribution.categorical({1: 0.5, 3: 0.5}), seed=13)
    else:
        spec = ModelSpec("ie", 3, rate=RateDistribution.uniform(0.5, 4.0), seed=13)
    g = grow(spec, 300).graph
    zeta0 = g.edge_type_proportions()
    s = RandomStream(99)
    trials = 40_000
    samples = np.empty((trials, 3))
    for i in range(trials):
        if kind == "ba":
            bundle = ba_step(g, spec.batch.sample(s), s)
        else:
            bundle = ie_step(g, spec.rate.sample(s), s)
        samples[i] = _zeta_after(g, bundle)
    se = samples.std(axis=0, ddof=1) / math.sqrt(trials)
    assert np.all(np.abs(samples.mean(axis=0) - zeta0) <= 3 * se)


def test_probe_ba_u_and_multi():
    spec = ModelSpec("ba", 2, batch=BatchDistribution.constant(1), seed=21)
    g = grow(spec, 10_000).graph
    rep = probe_assumptions(g, spec, (1, 1), 500_000, RandomStream(21, 1))
    assert abs(rep.u_hat - 1.0) <= 3 * rep.u_se
    assert rep.multi_hat == 0.0
    # newborn degree law at the frozen proportions
    q = ba_newborn_prob((1, 1), spec.batch, g.edge_type_proportions())
    assert q == 0.0 and rep.q_hat == 0.0
    rep1 = probe_assumptions(g, spec, (1, 0), 200_000, RandomStream(21, 2))
    q1 = ba_newborn_prob((1, 0), spec.batch, g.edge_type_proportions())
    assert abs(rep1.q_hat - q1) <= 3 * rep1.q_se


def test_probe_ie_r_hat():
    spec = ModelSpec("ie", 2, rate=RateDistribution.constant(1.0), seed=22)
    g = grow(spec, 10_000).graph
    rep = probe_assumptions(g, spec, (2, 0), 1_000_000, RandomStream(22, 1))
    assert abs(rep.r_hat[0] - 0.5) <= 3 * rep.r_se[0]
    assert 1 not in rep.r_hat
    assert abs(rep.u_hat - 1.0) <= 3 * rep.u_se


def test_probe_synthetic_vertex():
    spec = ModelSpec("ba", 2, batch=BatchDistribution.constant(1), seed=23)
    g = grow(spec, 2000).graph
    big = (40, 40)
    rep = probe_assumptions(g, spec, big, 200_000, RandomStream(23, 1))
    assert big in rep.synthetic
    assert abs(rep.u_hat - 40.0) <= 3 * rep.u_se + 0.02 * 40


def test_probe_rejects_zero_samples():
    spec = ModelSpec("ba", 1, batch=BatchDistribution.constant(1))
    g = grow(spec, 10).graph
    with pytest.raises(ModelError):
        probe_assumptions(g, spec, (1,), 0, RandomStream(0))
