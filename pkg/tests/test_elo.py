import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import logit

from metaeval.elo import EloRatings, OutcomeBatch, batch_elo_fit, elo_predict, elo_sample_complexity
from metaeval.errors import ConvergenceError, InputError
from metaeval.game import make_rng


def win_matrix(rng, n):
    """Random pairwise win rates with p[j, i] = 1 - p[i, j]."""
    p = rng.uniform(0.05, 0.95, size=(n, n))
    p = np.triu(p, 1)
    return p + np.tril(1 - p.T, -1) + 0.5 * np.eye(n)


def test_two_strategies_exact():
    batch = OutcomeBatch.from_win_matrix([[0.5, 0.75], [0.25, 0.5]], counts=4)
    r = batch_elo_fit(batch)
    assert elo_predict(r, 0, 1) == pytest.approx(0.75, abs=1e-6)
    assert r.ratings[0] - r.ratings[1] == pytest.approx(logit(0.75), abs=1e-6)
    assert abs(r.ratings.sum()) < 1e-12


def test_individual_records_match_aggregate():
    recs = [(0, 1, 1.0)] * 3 + [(0, 1, 0.0)] + [(1, 0, 0.0)] * 3 + [(1, 0, 1.0)]
    r = batch_elo_fit(OutcomeBatch.from_records(recs))
    assert elo_predict(r, 0, 1) == pytest.approx(0.75, abs=1e-6)


def test_all_half_gives_zero_ratings():
    r = batch_elo_fit(OutcomeBatch.from_win_matrix(np.full((4, 4), 0.5)))
    np.testing.assert_allclose(r.ratings, 0.0, atol=1e-12)


def test_rps_uniform_predictions():
    rps = np.array([[0.5, 0.0, 1.0], [1.0, 0.5, 0.0], [0.0, 1.0, 0.5]])
    r = batch_elo_fit(OutcomeBatch.from_win_matrix(rps, counts=10))
    np.testing.assert_allclose(r.ratings, 0.0, atol=1e-9)
    np.testing.assert_allclose(r.predict_matrix(), 0.5, atol=1e-9)


def test_dominant_strategy_regularised():
    recs = [(0, 1, 1.0)] * 5 + [(1, 0, 0.0)] * 5
    with pytest.raises(ConvergenceError) as err:
        batch_elo_fit(OutcomeBatch.from_records(recs), reg=0.0, max_iter=1)
    assert err.value.residual > 1e-8
    r = batch_elo_fit(OutcomeBatch.from_records(recs), reg=1e-6)
    gap = r.ratings[0] - r.ratings[1]
    assert np.isfinite(gap) and gap > 5
    # stationarity of the regularised objective: 10 (1 - sigmoid(gap)) = 2 reg r_0 with r_0 = gap / 2
    assert 10 * (1 - 1 / (1 + math.exp(-gap))) == pytest.approx(1e-6 * gap, abs=2e-8)  # gradient tol


@settings(max_examples=30)
@given(st.integers(2, 7), st.integers(0, 10 ** 6))
def test_row_sums_preserved(n, seed):
    p = win_matrix(make_rng(seed), n)
    r = batch_elo_fit(OutcomeBatch.from_win_matrix(p, counts=7), reg=0.0)
    q = r.predict_matrix()
    off = ~np.eye(n, dtype=bool)
    np.testing.assert_allclose((q * off).sum(axis=1), (p * off).sum(axis=1), atol=1e-5)
    assert abs(r.ratings.sum()) < 1e-9


def test_transitive_truth_reproduced():
    true_r = np.array([1.3, 0.2, -0.4, -1.1])
    p = 1 / (1 + np.exp(-(true_r[:, None] - true_r[None, :])))
    r = batch_elo_fit(OutcomeBatch.from_win_matrix(p), reg=0.0)
    np.testing.assert_allclose(r.predict_matrix(), p, atol=1e-4)
    np.testing.assert_allclose(r.ratings, true_r - true_r.mean(), atol=1e-6)


def test_predict_and_lookup():
    r = EloRatings(["a", "b"], np.array([0.5 * logit(0.75), -0.5 * logit(0.75)]), 1e-9)
    assert elo_predict(r, "a", "b") == pytest.approx(0.75, abs=1e-15)
    assert elo_predict(r, "a", "a") == 0.5
    with pytest.raises(InputError):
        elo_predict(r, "c", "a")
    back = EloRatings.from_json(r.to_json())
    assert back.strategies == ["a", "b"] and np.array_equal(back.ratings, r.ratings)


def test_uncovered_pairs_reported():
    r = batch_elo_fit(OutcomeBatch.from_records([(0, 1, 1.0), (1, 2, 0.0), (2, 1, 0.5)], 3))
    assert r.uncovered == [(0, 2)]


def test_batch_errors():
    with pytest.raises(InputError):
        OutcomeBatch.from_records([(0, 1, 1.5)])
    with pytest.raises(InputError):
        OutcomeBatch.from_records([(0, 3, 1.0)], n_strategies=2)
    with pytest.raises(InputError):
        batch_elo_fit(OutcomeBatch.from_records([(0, 1, 1.0)], n_strategies=3))


def test_sample_complexity():
    assert elo_sample_complexity(10, 0.1, 0.1) == math.floor(5000 * math.log(1000)) + 1
    assert elo_sample_complexity(10, 0.1, 0.1) == 34539
    for n, d in itertools.product([2, 5, 10], [0.01, 0.2]):
        a = 0.5 * n * n * math.log(n * n / d) / 0.2 ** 2
        b = 0.5 * n * n * math.log(n * n / d) / 0.1 ** 2
        assert b == pytest.approx(4 * a)
        assert elo_sample_complexity(n, 0.1, d) == math.floor(b) + 1
    vals = [elo_sample_complexity(n, 0.1, 0.1) for n in range(1, 20)]
    assert all(x < y for x, y in zip(vals, vals[1:]))
    with pytest.raises(InputError):
        elo_sample_complexity(3, 0.0, 0.1)
