"""Tests for probability primitives."""
import math

import numpy as np
import pytest
from scipy.stats import chisquare

from weakimplicit.core.exceptions import DegenerateDistributionError, DimensionMismatchError
from weakimplicit.core.prob import (
    ProbVector,
    RngStream,
    TableConditional,
    exp_fam_log_prob,
    normalize,
    sample_discrete,
    sample_rows,
)


def test_normalize_uniform():
    p = normalize([0.0, 0.0, 0.0])
    assert np.allclose(p.values, 1.0 / 3.0, atol=1e-15)


def test_normalize_log_two():
    p = normalize([math.log(2.0), 0.0])
    assert abs(p[0] - 2.0 / 3.0) < 1e-12
    assert abs(p[1] - 1.0 / 3.0) < 1e-12


def test_normalize_large_entries_stay_finite():
    v = 700.0 + RngStream(0).uniform(1000)
    p = normalize(v)
    assert np.all(np.isfinite(p.values))
    assert abs(p.values.sum() - 1.0) < 1e-12
    # the log-ratio of two entries survives the shift
    assert abs(math.log(p[0] / p[1]) - (v[0] - v[1])) < 1e-9


def test_normalize_shift_invariance():
    v = RngStream(1).normal(size=20)
    assert np.allclose(normalize(v + 123.4).values, normalize(v).values, atol=1e-12)


def test_normalize_all_minus_infinity():
    with pytest.raises(DegenerateDistributionError, match="degenerate distribution"):
        normalize([-np.inf, -np.inf])


def test_normalize_keeps_zero_weights():
    p = normalize([-np.inf, 0.0, 0.0])
    assert p[0] == 0.0
    assert p.support_size == 3


def test_prob_vector_validation():
    with pytest.raises(ValueError):
        ProbVector([0.5, 0.6])
    with pytest.raises(ValueError):
        ProbVector([1.5, -0.5])
    with pytest.raises(ValueError):
        ProbVector([])


def test_prob_vector_is_read_only():
    p = ProbVector([0.25, 0.75])
    with pytest.raises(ValueError):
        p.values[0] = 1.0


def test_from_weights_rejects_zero_total():
    with pytest.raises(DegenerateDistributionError):
        ProbVector.from_weights([0.0, 0.0])


def test_sample_discrete_point_mass(rng):
    p = ProbVector([1.0, 0.0, 0.0])
    assert all(sample_discrete(p, rng) == 0 for _ in range(200))


def test_sample_discrete_consumes_one_uniform():
    p = ProbVector([0.2, 0.3, 0.5])
    a, b = RngStream(5), RngStream(5)
    sample_discrete(p, a)
    b.uniform()
    assert a.uniform() == b.uniform()


def test_sample_discrete_reproducible():
    p = ProbVector([0.2, 0.3, 0.5])
    a, b = RngStream(9), RngStream(9)
    assert [sample_discrete(p, a) for _ in range(100)] == [sample_discrete(p, b) for _ in range(100)]


def test_sample_discrete_fair_coin(rng):
    p = ProbVector([0.5, 0.5])
    n = 100_000
    zeros = sum(sample_discrete(p, rng) == 0 for _ in range(n))
    assert abs(zeros / n - 0.5) <= 0.01


@pytest.mark.slow
def test_sample_discrete_chi_square(rng):
    probs = np.array([0.2, 0.3, 0.5])
    p = ProbVector(probs)
    n = 100_000
    counts = np.bincount([sample_discrete(p, rng) for _ in range(n)], minlength=3)
    assert chisquare(counts, probs * n).pvalue > 0.001


def test_sample_rows_point_masses(rng):
    probs = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
    assert list(sample_rows(probs, rng)) == [1, 2, 0]


def test_rng_children_depend_only_on_keys():
    a = RngStream(3).child(1, 2).uniform(5)
    b = RngStream(3).child(1, 2).uniform(5)
    c = RngStream(3).child(1, 3).uniform(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_rng_child_ignores_parent_draws():
    parent = RngStream(3)
    parent.uniform(10)
    assert np.array_equal(parent.child(4).uniform(3), RngStream(3).child(4).uniform(3))


def test_rng_spawn_and_key():
    children = RngStream(0).spawn(3)
    assert [c.key for c in children] == [(0,), (1,), (2,)]


def test_table_conditional_zero_params_uniform():
    model = TableConditional(3, 4, 'x')
    for x in range(3):
        for y in range(4):
            assert abs(exp_fam_log_prob(model, x, y) - math.log(0.25)) < 1e-12


def test_table_conditional_normalizes(rng):
    for given in ('x', 'y'):
        model = TableConditional(3, 4, given, rng.normal(size=12))
        for v in range(3 if given == 'x' else 4):
            if given == 'x':
                total = sum(math.exp(exp_fam_log_prob(model, v, y)) for y in range(4))
            else:
                total = sum(math.exp(exp_fam_log_prob(model, x, v)) for x in range(3))
            assert abs(total - 1.0) < 1e-10


def test_table_conditional_matches_enumeration(rng):
    theta = rng.normal(size=(2, 4))
    model = TableConditional(2, 4, 'x', theta.ravel())
    for x in range(2):
        direct = np.exp(theta[x]) / np.exp(theta[x]).sum()
        got = np.exp([exp_fam_log_prob(model, x, y) for y in range(4)])
        assert np.allclose(got, direct, atol=1e-12)


def test_table_conditional_matrix_is_column_stochastic(rng):
    posterior = TableConditional(3, 2, 'x', rng.normal(size=6))
    likelihood = TableConditional(3, 2, 'y', rng.normal(size=6))
    assert posterior.matrix().shape == (2, 3)
    assert likelihood.matrix().shape == (3, 2)
    assert np.allclose(posterior.matrix().sum(axis=0), 1.0)
    assert np.allclose(likelihood.matrix().sum(axis=0), 1.0)


def test_params_are_read_only_and_checked():
    model = TableConditional(2, 2, 'x', np.zeros(4))
    with pytest.raises(ValueError):
        model.params[0] = 1.0
    with pytest.raises(DimensionMismatchError):
        TableConditional(2, 2, 'x', np.zeros(3))
