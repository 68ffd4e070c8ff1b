"""Tests for stationary marginals, consistency checks and chain generation."""
import numpy as np
import pytest

from weakimplicit.core.exceptions import ConvergenceError, DimensionMismatchError, LemmaPreconditionError
from weakimplicit.core.models import ChainDirection
from weakimplicit.core.prob import RngStream, TableConditional
from weakimplicit.coupling import (
    DiscreteConditionalPair,
    check_strong_implicit,
    induced_joints,
    pair_from_joint,
    sample_reverse_chain,
    simulate_forward_chains,
    stationary_marginals,
    weakened_conditional,
)
from weakimplicit.oracle import dense_stationary


def _random_pair(rng, n_x, n_y):
    A = rng.uniform((n_y, n_x)) + 0.05
    B = rng.uniform((n_x, n_y)) + 0.05
    return DiscreteConditionalPair(A / A.sum(axis=0), B / B.sum(axis=0))


def test_pair_validates_columns():
    with pytest.raises(ValueError):
        DiscreteConditionalPair(np.array([[0.5, 0.5], [0.4, 0.5]]), np.full((2, 2), 0.5))
    with pytest.raises(DimensionMismatchError):
        DiscreteConditionalPair(np.full((2, 3), 0.5), np.full((2, 3), 0.5))


def test_symmetric_pair_has_uniform_marginals():
    pair = DiscreteConditionalPair(np.full((2, 2), 0.5), np.full((2, 2), 0.5))
    pX, pY = stationary_marginals(pair)
    assert np.allclose(pX.values, 0.5)
    assert np.allclose(pY.values, 0.5)


def test_derived_pair_recovers_joint_marginals(positive_joint):
    pair = pair_from_joint(positive_joint)
    pX, pY = stationary_marginals(pair)
    assert np.allclose(pX.values, positive_joint.sum(axis=1), atol=1e-10)
    assert np.allclose(pY.values, positive_joint.sum(axis=0), atol=1e-10)


def test_stationary_satisfies_both_fixed_point_lines(rng):
    for k in range(20):
        pair = _random_pair(rng.child(k), 5, 3)
        pX, pY = stationary_marginals(pair)
        assert np.max(np.abs(pair.A @ pX.values - pY.values)) <= 1e-10
        assert np.max(np.abs(pair.B @ pY.values - pX.values)) <= 1e-10


def test_stationary_matches_dense_eigensolve(rng):
    for k in range(100):
        r = rng.child(k)
        n_x, n_y = (int(v) for v in r.integers(2, 9, size=2))
        pair = _random_pair(r, n_x, n_y)
        pX, pY = stationary_marginals(pair)
        dX, dY = dense_stationary(pair)
        assert np.max(np.abs(pX.values - dX.values)) <= 1e-8
        assert np.max(np.abs(pY.values - dY.values)) <= 1e-8


def test_strict_mode_rejects_zero_entries():
    A = np.array([[1.0, 0.0], [0.0, 1.0]])
    pair = DiscreteConditionalPair(A, A)
    with pytest.raises(LemmaPreconditionError, match="lemma preconditions violated"):
        stationary_marginals(pair)


def test_relaxed_mode_accepts_converging_chain():
    A = np.array([[1.0, 0.5], [0.0, 0.5]])
    pair = DiscreteConditionalPair(A, A.copy())
    with pytest.raises(LemmaPreconditionError):
        stationary_marginals(pair)
    pX, pY = stationary_marginals(pair, strict=False)
    assert np.allclose(pX.values, [1.0, 0.0], atol=1e-10)
    assert np.allclose(pY.values, [1.0, 0.0], atol=1e-10)


def test_convergence_error_carries_residual():
    with pytest.raises(ConvergenceError) as info:
        stationary_marginals(_random_pair(RngStream(2), 4, 4), tol=0.0, max_iter=3)
    assert info.value.iterations == 3
    assert info.value.residual >= 0.0


def test_strong_check_holds_for_derived_pair(positive_joint):
    pair = pair_from_joint(positive_joint)
    pX, pY = stationary_marginals(pair)
    check = check_strong_implicit(pair, pX, pY)
    assert check.holds
    assert check.max_residual <= 1e-12
    joint_x, _ = induced_joints(pair, pX, pY)
    assert np.allclose(joint_x, positive_joint, atol=1e-10)


def test_independence_construction_is_only_weak(rng):
    A = rng.uniform((3, 4)) + 0.1
    A /= A.sum(axis=0)
    column = rng.uniform(4) + 0.1
    B = np.repeat((column / column.sum())[:, None], 3, axis=1)
    pair = DiscreteConditionalPair(A, B)
    pX, pY = stationary_marginals(pair)
    check = check_strong_implicit(pair, pX, pY)
    assert not check.holds
    assert np.allclose(pX.values, column / column.sum())


def test_strong_check_residual_is_brute_force_maximum(rng):
    pair = _random_pair(rng, 4, 3)
    pX, pY = stationary_marginals(pair)
    brute = max(
        abs(pX[x] * pair.A[y, x] - pY[y] * pair.B[x, y])
        for x in range(4) for y in range(3)
    )
    assert check_strong_implicit(pair, pX, pY).max_residual == pytest.approx(brute, abs=1e-15)


def test_weakened_conditional_extremes(rng):
    energy_xy = rng.normal(size=(4, 3))
    energy_x = rng.normal(size=4)
    flat = weakened_conditional(energy_xy, energy_x, 0.0)
    assert np.allclose(flat, flat[:, :1])
    assert np.allclose(flat.sum(axis=0), 1.0)
    matching = np.eye(4)[:, :3]
    sharp = weakened_conditional(matching, np.zeros(4), 50.0)
    assert np.allclose(sharp.max(axis=0), 1.0, atol=1e-12)
    assert list(sharp.argmax(axis=0)) == [0, 1, 2]


def test_reverse_chain_point_mass(rng):
    # posterior puts all mass on y = 1 whatever x is
    theta = np.tile([-50.0, 50.0], 3)
    posterior = TableConditional(3, 2, 'x', theta)
    likelihood = TableConditional(3, 2, 'y')
    chain = sample_reverse_chain(posterior, likelihood, 2, 1, rng)
    assert chain.items == (2, 1)
    assert chain.direction is ChainDirection.REVERSE


def test_reverse_chain_has_algorithm_shape(toy_model, rng):
    chain = sample_reverse_chain(toy_model.posterior(), toy_model.likelihood(), 1, 3, rng)
    assert len(chain) == 4
    assert chain.items[0] == 1
    assert len(chain.observations) == 2 and len(chain.labels) == 2
    with pytest.raises(ValueError):
        sample_reverse_chain(toy_model.posterior(), toy_model.likelihood(), 1, 0, rng)


@pytest.mark.slow
def test_reverse_chain_first_label_distribution(toy_model, rng):
    posterior, likelihood = toy_model.posterior(), toy_model.likelihood()
    n = 100_000
    draws = [sample_reverse_chain(posterior, likelihood, 2, 1, rng).items[1] for _ in range(n)]
    freq = np.bincount(draws, minlength=3) / n
    assert 0.5 * np.abs(freq - toy_model.A[:, 2]).sum() <= 0.01


def test_forward_chains_reach_stationary_marginal(rng):
    pair = _random_pair(rng.child(0), 6, 4)
    pX, _ = stationary_marginals(pair)
    x0 = np.zeros(20_000, dtype=int)
    x, y = simulate_forward_chains(pair, x0, 200, rng.child(1))
    freq = np.bincount(x, minlength=6) / x.size
    assert 0.5 * np.abs(freq - pX.values).sum() <= 0.02
    assert y.shape == x.shape
