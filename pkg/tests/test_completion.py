import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import expit

from metaeval.alpharank import AlphaRankParams, SINGLE, alpharank
from metaeval.completion import (MaskedMatrix, alternating_minimization, complete_and_rank, forward_transform,
                                 inverse_transform, random_mask, write_grid_csv)
from metaeval.errors import InputError
from metaeval.game import PayoffTensor, make_rng
from metaeval.metrics import ranking_from_distribution


def rank_one_logits(rng, n):
    return np.outer(rng.standard_normal(n), rng.standard_normal(n))


def test_full_observation_full_rank_reconstructs():
    x = make_rng(1).standard_normal((5, 4))
    res = alternating_minimization(x, np.ones_like(x, bool), 4, iters=50)
    np.testing.assert_allclose(res.completed, x, atol=1e-8)


def test_rank_one_recovery_half_observed():
    rng = make_rng(3)
    L = rank_one_logits(rng, 10)
    mask = random_mask(L.shape, 0.5, rng)
    res = alternating_minimization(L, mask, 1, iters=500)
    np.testing.assert_allclose(res.completed, L, atol=1e-4)


@pytest.mark.parametrize("init", ["spectral", "random"])
def test_objective_nonincreasing(init):
    rng = make_rng(5)
    x = rng.standard_normal((8, 6))
    mask = random_mask(x.shape, 0.6, rng)
    res = alternating_minimization(x, mask, 2, iters=100, rng=make_rng(5, 1), init=init)
    obj = np.array(res.objective)
    assert np.all(np.diff(obj) <= 1e-12)


@settings(max_examples=50)
@given(st.lists(st.floats(1e-6, 1 - 1e-6), min_size=1, max_size=20), st.sampled_from(["logit", "odds", "payoff"]))
def test_transform_roundtrip(ps, transform):
    p = np.array(ps)
    back = inverse_transform(forward_transform(p, transform), transform, clip=False)
    np.testing.assert_allclose(back, p, atol=1e-12)


def test_odds_clipped_before_inversion():
    out = inverse_transform(np.array([-3.0, 0.0, 1.0]), "odds")
    assert np.all((out > 0) & (out < 1))
    assert out[2] == pytest.approx(0.5)


@pytest.mark.parametrize("transform", ["payoff", "logit", "odds"])
def test_full_observation_matches_direct_ranking(transform):
    rng = make_rng(9)
    truth = expit(rank_one_logits(rng, 5))
    res = complete_and_rank(MaskedMatrix(truth, np.ones_like(truth, bool), transform), 5, truth=truth)
    assert res["kendall"] == 0
    direct = alpharank(PayoffTensor(np.stack([truth, 1 - truth]), m_max=1.0),
                       AlphaRankParams(population_mode=SINGLE))
    assert ranking_from_distribution(res["ranking"]) == ranking_from_distribution(direct)


def test_rank_one_logit_sixty_percent():
    hits = 0
    for seed in range(5):
        rng = make_rng(seed)
        truth = expit(rank_one_logits(rng, 8))
        mask = random_mask(truth.shape, 0.6, make_rng(seed, 1))
        res = complete_and_rank(MaskedMatrix(truth, mask, "logit"), 1, truth=truth, iters=300)
        hits += res["kendall"] == 0
    assert hits == 5


def test_underdetermined_warning():
    x = np.ones((3, 3))
    mask = np.eye(3, dtype=bool)
    res = alternating_minimization(x, mask, 2, iters=3)
    assert res.warnings


def test_input_errors(tmp_path):
    with pytest.raises(InputError):
        alternating_minimization(np.ones((2, 2)), np.zeros((2, 2), bool), 1)
    with pytest.raises(InputError):
        alternating_minimization(np.ones((2, 2)), np.ones((2, 2), bool), 3)
    with pytest.raises(InputError):
        alternating_minimization(np.ones((2, 2)), np.ones((2, 2), bool), 1, init="random")
    with pytest.raises(InputError):
        MaskedMatrix(np.array([[0.0, 1.0], [0.5, 0.5]]), np.ones((2, 2), bool), "logit")
    with pytest.raises(InputError):
        MaskedMatrix(np.ones((2, 2)), np.ones((3, 2), bool))
    write_grid_csv([("logit", 1, 0.5, 0, 0.0)], tmp_path / "g.csv")
    assert (tmp_path / "g.csv").read_text().splitlines()[0] == "transform,rank,obs_rate,seed,kendall_error"
