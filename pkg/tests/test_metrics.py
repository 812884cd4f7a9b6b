import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metaeval.alpharank import response_graph
from metaeval.errors import InputError
from metaeval.game import PayoffTensor, make_rng
from metaeval.metrics import (PartialRanking, edge_errors, gap_distribution, kendall_partial,
                              ranking_from_distribution)


def test_kendall_examples():
    a = PartialRanking([["a"], ["b"], ["c"]])
    assert kendall_partial(a, a) == 0
    assert kendall_partial(a, PartialRanking([["c"], ["b"], ["a"]])) == 3
    assert kendall_partial(PartialRanking([["a"], ["b"]]), PartialRanking([["a", "b"]])) == 0.5
    assert kendall_partial(PartialRanking([["a"], ["b"]]), PartialRanking([["a", "b"]]), p=0.2) == 0.2
    assert kendall_partial(PartialRanking([["a", "b"]]), PartialRanking([["b", "a"]])) == 0
    with pytest.raises(InputError):
        kendall_partial(a, PartialRanking([["a"], ["b"]]))
    with pytest.raises(InputError):
        PartialRanking([["a"], ["a"]])


def partial_rankings(items):
    """Strategy for a random bucket order of ``items``."""
    return st.lists(st.integers(0, len(items) - 1), min_size=len(items), max_size=len(items)).map(
        lambda levels: PartialRanking([[x for x, l in zip(items, levels) if l == v] for v in sorted(set(levels))]))


ITEMS = list("abcdefgh")


@settings(max_examples=300)
@given(st.integers(1, 8).flatmap(lambda n: st.tuples(*[partial_rankings(ITEMS[:n])] * 3)))
def test_kendall_metric_axioms(triple):
    x, y, z = triple
    dxy = kendall_partial(x, y)
    assert dxy >= 0 and dxy == kendall_partial(y, x)
    assert (dxy == 0) == (x.position() == y.position() or _same_order(x, y))
    assert kendall_partial(x, z) <= dxy + kendall_partial(y, z) + 1e-12


def _same_order(x, y):
    px, py = x.position(), y.position()
    return all((px[i] < px[j]) == (py[i] < py[j]) and (px[i] == px[j]) == (py[i] == py[j])
               for i, j in itertools.combinations(px, 2))


@given(partial_rankings(ITEMS[:6]), partial_rankings(ITEMS[:6]), st.permutations(range(6)))
def test_kendall_relabel_invariant(x, y, perm):
    mapping = {ITEMS[i]: 10 + perm[i] for i in range(6)}
    rx = PartialRanking([[mapping[i] for i in b] for b in x.buckets])
    ry = PartialRanking([[mapping[i] for i in b] for b in y.buckets])
    assert kendall_partial(rx, ry) == kendall_partial(x, y)


def test_ranking_from_distribution_examples():
    assert ranking_from_distribution(np.full(4, 0.25), 1e-12).buckets == ((0, 1, 2, 3),)
    assert ranking_from_distribution([0.7, 0.2, 0.1], 1e-6).buckets == ((0,), (1,), (2,))
    assert ranking_from_distribution([0.5, 0.5 - 1e-9, 2e-9], 1e-6).buckets == ((0, 1), (2,))
    assert ranking_from_distribution([0.1, 0.7, 0.2], 1e-6, states="xyz").buckets == (("y",), ("z",), ("x",))


def test_edge_errors(sink_game):
    truth = response_graph(sink_game)
    assert edge_errors(truth, truth) == 0
    flipped = response_graph(PayoffTensor(1 - sink_game.payoffs))
    assert edge_errors(flipped, truth) == 4 == edge_errors(truth, flipped)
    m1 = np.array([[0.5, 0.85], [0.15, 0.5]])
    m2 = 1 - m1
    m2[1, 0] = 0.4  # player 2 now prefers (1, 1) over (1, 0)
    one = response_graph(PayoffTensor.from_bimatrix(m1, m2))
    assert edge_errors(one, truth) == 1 == edge_errors(truth, one)
    with pytest.raises(InputError):
        edge_errors(truth, response_graph(PayoffTensor(np.zeros((2, 2, 3)))))


@settings(max_examples=30)
@given(st.integers(0, 10 ** 6))
def test_edge_errors_symmetric(seed):
    rng = make_rng(seed)
    g1 = response_graph(PayoffTensor(rng.random((2, 3, 2))))
    g2 = response_graph(PayoffTensor(rng.random((2, 3, 2))))
    assert edge_errors(g1, g2) == edge_errors(g2, g1)


def test_gap_distribution(sink_game):
    np.testing.assert_allclose(gap_distribution(sink_game), [0.35] * 4, atol=1e-15)
    assert np.all(gap_distribution(PayoffTensor(np.full((2, 3, 3), 0.4))) == 0)
    assert len(gap_distribution(PayoffTensor(np.zeros((3, 2, 3, 4))))) == 24 * (1 + 2 + 3) // 2
