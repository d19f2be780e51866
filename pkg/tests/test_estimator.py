import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sasmo.core import Box, InvalidArgumentError, InvalidStateError, UnsupportedError
from sasmo.estimator import (
    dominator_indices,
    exact_finite,
    importance_weights,
    is_estimate,
    mc_uniform,
    pairwise_domination_counts,
    score,
)
from sasmo.model import GaussianComponent, MixtureModel, sample
from sasmo.problems import Problem, lookup

from . import oracles


def _finite(points, objective=lambda X: X.copy()):
    P = np.asarray(points, dtype=float)
    return Problem("tiny", P.shape[1], P.shape[1], Box.uniform(-10, 10, P.shape[1]),
                   objective, finite_space=P)


def test_exact_two_points():
    assert exact_finite(_finite([[0, 0], [1, 1]])).tolist() == [0.0, 0.5]


def test_exact_incomparable_points():
    assert exact_finite(_finite([[0, 2], [1, 1], [2, 0]])).tolist() == [0.0, 0.0, 0.0]


def test_exact_continuous_unsupported():
    with pytest.raises(UnsupportedError):
        exact_finite(lookup("zdt2"))


def test_exact_discrete_example_matches_rational_oracle():
    D = exact_finite(lookup("discrete_example"))
    expected = [float(v) for v in oracles.discrete_exact_measure()]
    assert D.tolist() == expected


def test_exact_random_subsets_agree_with_oracle():
    rng = np.random.default_rng(11)
    full = lookup("discrete_example")
    for _ in range(20):
        pts = rng.choice(101, size=20, replace=False).astype(float).reshape(-1, 1)
        sub = Problem("sub", 1, 2, full.box, full.objective, finite_space=pts)
        F = full.objective(pts).tolist()
        expected = [c / 20 for c in oracles.dominator_weights(F)]
        assert exact_finite(sub).tolist() == expected


def test_mc_uniform_counts():
    F = np.array([[0.5, 0.5], [0.1, 0.1], [0.9, 0.2], [0.7, 0.9]])
    # (0.5, 0.5) is dominated only by (0.1, 0.1)
    assert mc_uniform(F)[0] == 0.25
    assert mc_uniform(F)[1] == 0.0


def test_mc_uniform_rejects_zero_samples():
    with pytest.raises(InvalidArgumentError):
        mc_uniform(np.zeros((3, 2)), n_samples=0)


def test_is_estimate_two_points():
    F = np.array([[1.0, 1.0], [0.0, 0.0]])
    D = is_estimate(F, np.array([2.0, 0.5]), 1.0)
    assert D[0] == 1.0
    assert D[1] == 0.0


def test_is_estimate_rejects_non_positive_density():
    with pytest.raises(InvalidStateError):
        is_estimate(np.zeros((2, 2)), np.array([1.0, 0.0]), 1.0)
    with pytest.raises(InvalidStateError):
        importance_weights(np.array([-1.0]), 1.0)


def test_importance_weights_exactly_one_for_uniform():
    volume = 37.5
    assert np.all(importance_weights(np.full(5, 1.0 / volume), volume) == 1.0)


def test_is_estimate_with_pure_uniform_mixture_is_mc():
    box = Box.uniform(0, 3, 2)
    model = MixtureModel((GaussianComponent.isotropic(np.ones(2), 0.3),), 1.0, box)
    rng = np.random.default_rng(5)
    X = sample(model, rng, 500)
    F = lookup("identity2d").objective(X / 3.0)
    assert np.array_equal(is_estimate(F, model.density(X), box.volume), mc_uniform(F))


def test_all_identical_vectors_have_zero_counts():
    assert pairwise_domination_counts(np.ones((7, 3))).tolist() == [0.0] * 7


@pytest.mark.parametrize("n_obj", [1, 2, 3])
def test_chain_counts(n_obj):
    K = 9
    F = np.repeat(np.arange(K, dtype=float)[::-1, None], n_obj, axis=1)
    assert pairwise_domination_counts(F).tolist() == [float(K - 1 - i) for i in range(K)]


def test_counts_reject_ragged_and_mismatched_input():
    with pytest.raises(InvalidArgumentError):
        pairwise_domination_counts([[1.0, 2.0], [1.0]])
    with pytest.raises(InvalidArgumentError):
        pairwise_domination_counts(np.zeros((3, 2)), weights=np.ones(2))


@pytest.mark.parametrize("n_obj", [2, 3])
@given(data=st.data())
def test_weighted_counts_match_oracle(n_obj, data):
    n = data.draw(st.integers(1, 30))
    F = data.draw(arrays(np.float64, (n, n_obj), elements=st.integers(0, 5).map(float)))
    w = data.draw(arrays(np.float64, (n,), elements=st.floats(0.01, 10.0)))
    got = pairwise_domination_counts(F, w)
    expected = oracles.dominator_weights(F.tolist(), w.tolist())
    np.testing.assert_allclose(got, expected, rtol=1e-12, atol=0)
    assert np.all((got == 0) == (np.array(expected) == 0))


@given(arrays(np.float64, (25, 2), elements=st.integers(0, 6).map(float)))
def test_unit_weight_counts_are_exact_integers(F):
    got = pairwise_domination_counts(F)
    assert got.tolist() == oracles.dominator_weights(F.tolist())


@given(arrays(np.float64, (20, 2), elements=st.floats(0, 1)),
       arrays(np.float64, (20,), elements=st.floats(0.1, 5.0)))
def test_dominance_monotone_along_chains(F, g):
    D = is_estimate(F, g, 1.0)
    for a in range(F.shape[0]):
        for b in range(F.shape[0]):
            if oracles.dominates(F[a], F[b]):
                assert D[a] <= D[b]


def test_dominator_indices():
    F = np.array([[0.0, 0.0], [1.0, 1.0], [0.5, 2.0]])
    assert dominator_indices(F, 1).tolist() == [0]
    assert dominator_indices(F, 0).tolist() == []


def test_score_wraps_rows():
    out = score(np.zeros((2, 1)), np.zeros((2, 2)), np.array([0.0, 0.5]))
    assert [s.dmeasure for s in out] == [0.0, 0.5]
    assert out[0].density == 1.0


def test_identity2d_mean_estimate_near_quarter():
    rng = np.random.default_rng(2024)
    est = []
    for _ in range(50):
        X = np.vstack([[0.5, 0.5], rng.random((2000, 2))])
        est.append(mc_uniform(X, n_samples=2000)[0])
    se = np.sqrt(0.25 * 0.75 / 2000 / 50)
    assert abs(np.mean(est) - 0.25) < 4 * se
