import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sasmo.cluster import THRESHOLD_FLOOR, Cluster, ClusterSet, cluster, next_threshold, with_next_threshold
from sasmo.core import InvalidArgumentError

from . import oracles


def _fake(trace_values):
    """Clusters whose population traces equal the given values (2-point clusters in 1-D)."""
    out = []
    for t in trace_values:
        half = np.sqrt(t)
        pts = np.array([[-half], [half]])
        out.append(Cluster(np.zeros(1), pts, np.arange(2), np.zeros(2)))
    return out


def test_single_point():
    cs = cluster(np.array([[0.3, 0.4]]), 1.0, np.random.default_rng(0))
    assert len(cs) == 1
    assert cs.clusters[0].centroid.tolist() == [0.3, 0.4]


def test_far_points_split():
    cs = cluster(np.array([[0.0, 0.0], [3.0, 0.0]]), 1.0, np.random.default_rng(0))
    assert len(cs) == 2


def test_near_points_merge_at_midpoint():
    cs = cluster(np.array([[0.0, 0.0], [0.5, 0.0]]), 1.0, np.random.default_rng(0))
    assert len(cs) == 1
    assert cs.clusters[0].centroid.tolist() == [0.25, 0.0]


def test_invalid_inputs():
    with pytest.raises(InvalidArgumentError):
        cluster(np.empty((0, 2)), 1.0, np.random.default_rng(0))
    with pytest.raises(InvalidArgumentError):
        cluster(np.zeros((1, 2)), 0.0, np.random.default_rng(0))


def test_all_singletons_hit_floor():
    singles = [Cluster(np.zeros(2), np.zeros((1, 2)), np.array([i]), np.zeros(1)) for i in range(3)]
    assert next_threshold(singles, 1.0, 1.1) == THRESHOLD_FLOOR


def test_eq_trace_branch():
    traces = [0.3, 0.5]
    value = next_threshold(_fake(traces), 1.0, 1.1)
    assert value == pytest.approx(0.36363636363636365, rel=1e-14)
    assert value == pytest.approx(oracles.next_threshold(traces, 1.0, 1.1), rel=1e-14)


def test_geometric_branch_binds():
    assert next_threshold(_fake([5.0, 7.0]), 1.0, 1.1) == 1.0 / 1.1


def test_next_threshold_validation():
    with pytest.raises(InvalidArgumentError):
        next_threshold([], 1.0, 1.1)
    with pytest.raises(InvalidArgumentError):
        next_threshold(_fake([0.1]), 1.0, 1.0)


def test_with_next_threshold():
    cs = ClusterSet(tuple(_fake([0.3, 0.5])), 1.0)
    assert with_next_threshold(cs, 1.1).next_threshold == next_threshold(cs, 1.0, 1.1)


def _check_contract(X, delta, cs):
    n = X.shape[0]
    idx = np.sort(np.concatenate([c.indices for c in cs.clusters]))
    assert idx.tolist() == list(range(n))
    for c in cs.clusters:
        np.testing.assert_array_equal(c.members, X[c.indices])
        np.testing.assert_allclose(c.centroid, c.members.mean(axis=0), rtol=1e-12, atol=1e-12)
        assert np.all(c.assignment_distances < delta)
        assert c.trace >= 0.0
    assert cs.threshold_used == delta


@given(arrays(np.float64, st.tuples(st.integers(1, 40), st.integers(1, 4)), elements=st.floats(-3, 3)),
       st.floats(0.05, 4.0), st.integers(0, 2**32 - 1), st.floats(1.01, 3.0))
def test_clustering_contract(X, delta, seed, shrink):
    cs = cluster(X, delta, np.random.default_rng(seed))
    _check_contract(X, delta, cs)
    assert next_threshold(cs, delta, shrink) <= delta / shrink


@given(arrays(np.float64, st.tuples(st.integers(1, 30), st.just(2)), elements=st.floats(-3, 3)),
       st.integers(0, 1000))
def test_clustering_is_seeded(X, seed):
    a = cluster(X, 0.7, np.random.default_rng(seed))
    b = cluster(X, 0.7, np.random.default_rng(seed))
    assert a.sizes == b.sizes
    for ca, cb in zip(a.clusters, b.clusters):
        assert np.array_equal(ca.indices, cb.indices)
        assert np.array_equal(ca.centroid, cb.centroid)


@given(st.integers(0, 1000))
def test_separated_points_give_singletons_for_any_seed(seed):
    X = np.arange(10, dtype=float).reshape(-1, 1) * 2.0
    cs = cluster(X, 1.0, np.random.default_rng(seed))
    assert sorted(cs.sizes) == [1] * 10


def test_population_trace():
    c = _fake([0.8])[0]
    assert c.trace == pytest.approx(0.8)
    single = Cluster(np.zeros(2), np.ones((1, 2)), np.array([0]), np.zeros(1))
    assert single.trace == 0.0
