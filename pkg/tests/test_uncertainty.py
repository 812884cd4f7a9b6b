import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metaeval.alpharank import SINGLE, AlphaRankParams, alpharank
from metaeval.errors import InputError
from metaeval.game import PayoffTensor, make_rng
from metaeval.uncertainty import (MAXIMIZE, MINIMIZE, PayoffBounds, all_ranking_intervals, classify_edges,
                                  enumerate_orientations, mcc_membership_possible, ranking_weight_interval,
                                  ssp_extremal_return_time)

from oracles import enumerate_interval, orientation_masses

GRID = np.array([0.0, 0.25, 0.5, 0.75, 1.0])


def random_bounds(rng, counts, max_open=8):
    """Payoffs on a coarse grid (so ties and touching intervals occur), with random widths."""
    while True:
        mid = GRID[rng.integers(len(GRID), size=(len(counts),) + counts)]
        w = rng.choice([0.0, 0.0, 0.125, 0.3], size=mid.shape)
        bounds = PayoffBounds(mid - w, mid + w)
        graph = classify_edges(bounds)
        if len(graph.uncertain) <= max_open:
            return bounds, graph


def oracle(graph, m):
    certain = [(u, v) for u, v, _ in graph.certain]
    uncertain = [(a, b) for a, b, _ in graph.uncertain]
    ties = [(a, b) for a, b, _ in graph.ties]
    return enumerate_interval(graph.num_states, certain, uncertain, ties, m)


@pytest.mark.parametrize("counts", [(2, 2), (2, 3), (3, 3), (2, 2, 2)])
def test_intervals_match_enumeration(counts):
    rng = make_rng(11, len(counts), counts[-1])
    m = 50
    for _ in range(6):
        bounds, graph = random_bounds(rng, counts)
        lo, hi = oracle(graph, m)
        ivs = all_ranking_intervals(bounds, AlphaRankParams(m=m))
        np.testing.assert_allclose([iv.pi_lo for iv in ivs], lo, atol=1e-9)
        np.testing.assert_allclose([iv.pi_hi for iv in ivs], hi, atol=1e-9)
        for iv, low in zip(ivs, lo):
            assert iv.excludable == (low < 1e-12)


def test_sink_game_all_certain(sink_game):
    ivs = {iv.state: iv for iv in all_ranking_intervals(PayoffBounds.exact(sink_game))}
    assert (ivs[(0, 0)].pi_lo, ivs[(0, 0)].pi_hi) == (1.0, 1.0)
    assert not ivs[(0, 0)].excludable
    assert ivs[(1, 1)].excludable and ivs[(1, 1)].pi_hi == 0.0
    assert mcc_membership_possible(3, classify_edges(PayoffBounds.exact(sink_game))).excludable


def test_exact_bounds_give_point_intervals():
    # with no open edges the interval collapses to the ranking weight itself
    rng = make_rng(4)
    game = PayoffTensor(rng.random((2, 3, 3)))
    ivs = all_ranking_intervals(PayoffBounds.exact(game))
    graph = classify_edges(PayoffBounds.exact(game))
    w = orientation_masses(9, [(u, v) for u, v, _ in graph.certain], [], 50)
    np.testing.assert_allclose([iv.pi_lo for iv in ivs], w, atol=1e-12)
    np.testing.assert_allclose([iv.pi_hi for iv in ivs], w, atol=1e-12)
    # and agrees with the sink-component masses of the perturbed chain at small perturbation
    dist = alpharank(game, AlphaRankParams(perturbation=1e-12))
    np.testing.assert_allclose(dist.pi, w, atol=1e-6)


def test_touching_intervals_are_settled():
    lo = np.array([[[0.0, 0.0], [0.5, 0.0]], [[0.0, 0.0], [0.0, 0.0]]])
    hi = np.array([[[0.5, 0.0], [0.7, 0.0]], [[0.0, 0.0], [0.0, 0.0]]])
    graph = classify_edges(PayoffBounds(lo, hi))
    assert (0, 2, 0) in graph.certain  # player 0 deviates (0,0) -> (1,0)
    assert all(e[:2] != (0, 2) for e in graph.uncertain)


def test_orientations_count():
    rng = make_rng(2)
    bounds, graph = random_bounds(rng, (2, 3), max_open=4)
    assert sum(1 for _ in enumerate_orientations(graph)) == 2 ** len(graph.uncertain)


@settings(max_examples=20)
@given(st.integers(0, 10 ** 6))
def test_nested_bounds_nested_intervals(seed):
    rng = make_rng(seed)
    game = PayoffTensor(rng.random((2, 2, 3)))
    inner = PayoffBounds.around(game, 0.05)
    outer = PayoffBounds.around(game, 0.2)
    for a, b in zip(all_ranking_intervals(inner), all_ranking_intervals(outer)):
        assert b.pi_lo <= a.pi_lo + 1e-12
        assert a.pi_hi <= b.pi_hi + 1e-12


def test_return_time_extremes_ordered():
    rng = make_rng(8)
    bounds, graph = random_bounds(rng, (3, 3))
    for s in range(graph.num_states):
        lo = ssp_extremal_return_time(s, graph, MINIMIZE, 50)
        if not mcc_membership_possible(s, graph).excludable:
            hi = ssp_extremal_return_time(s, graph, MAXIMIZE, 50)
            assert 1.0 - 1e-12 <= lo <= hi + 1e-9


def test_single_population_matches_enumeration():
    rng = make_rng(21)
    n = 4
    for _ in range(5):
        p = GRID[rng.integers(len(GRID), size=(n, n))]
        p = np.triu(p, 1) + np.tril(1 - p.T, -1) + 0.5 * np.eye(n)
        w = rng.choice([0.0, 0.125], size=(n, n))
        w = np.triu(w, 1) + np.triu(w, 1).T
        bounds = PayoffBounds(np.stack([p - w, 1 - p - w.T]), np.stack([p + w, 1 - p + w.T]))
        params = AlphaRankParams(population_mode=SINGLE)
        graph = classify_edges(bounds, SINGLE)
        lo, hi = oracle(graph, 50)
        ivs = all_ranking_intervals(bounds, params)
        np.testing.assert_allclose([iv.pi_lo for iv in ivs], lo, atol=1e-9)
        np.testing.assert_allclose([iv.pi_hi for iv in ivs], hi, atol=1e-9)


def test_input_errors(sink_game):
    with pytest.raises(InputError):
        PayoffBounds(np.ones((2, 2, 2)), np.zeros((2, 2, 2)))
    with pytest.raises(InputError):
        PayoffBounds(np.zeros((2, 2)), np.zeros((2, 2)))
    with pytest.raises(InputError):
        ranking_weight_interval((5, 5), PayoffBounds.exact(sink_game))
    with pytest.raises(InputError):
        ssp_extremal_return_time(0, classify_edges(PayoffBounds.exact(sink_game)), "median", 50)
