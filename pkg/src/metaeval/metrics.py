"""Comparing rankings and response graphs."""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass

import numpy as np

from metaeval.alpharank import MULTI, RankingDistribution, _comparisons, order_by_mass
from metaeval.errors import InputError
from metaeval.game import PayoffTensor

__all__ = ["PartialRanking", "kendall_partial", "edge_errors", "ranking_from_distribution",
           "gap_distribution", "write_gaps_csv"]


@dataclass(frozen=True)
class PartialRanking:
    """Ordered buckets of items; items in one bucket are tied."""

    buckets: tuple

    def __init__(self, buckets):
        bs = tuple(tuple(b) for b in buckets)
        if any(len(b) == 0 for b in bs):
            raise InputError("empty bucket")
        items = [x for b in bs for x in b]
        if len(set(items)) != len(items):
            raise InputError("an item appears in more than one bucket")
        object.__setattr__(self, "buckets", bs)

    @classmethod
    def from_scores(cls, scores: dict, tie_tol: float = 0.0) -> "PartialRanking":
        keys = list(scores)
        return cls([[keys[i] for i in g] for g in order_by_mass([scores[k] for k in keys], tie_tol)])

    @property
    def items(self) -> set:
        return {x for b in self.buckets for x in b}

    def position(self) -> dict:
        return {x: r for r, b in enumerate(self.buckets) for x in b}


def kendall_partial(r: PartialRanking, r_hat: PartialRanking, p: float = 0.5) -> float:
    """Kendall distance between rankings with ties.

    Each unordered pair contributes 0 when both rankings order it the same
    way or both tie it, 1 when they order it oppositely, and ``p`` when
    exactly one of them ties it.
    """
    if r.items != r_hat.items:
        raise InputError("rankings cover different items")
    if not 0 <= p <= 1:
        raise InputError("p must lie in [0, 1]")
    pos, pos_hat = r.position(), r_hat.position()
    total = 0.0
    for i, j in itertools.combinations(sorted(r.items, key=repr), 2):
        d = pos[i] - pos[j]
        d_hat = pos_hat[i] - pos_hat[j]
        if d == 0 and d_hat == 0:
            continue
        if d == 0 or d_hat == 0:
            total += p
        elif (d > 0) != (d_hat > 0):
            total += 1.0
    return total


def edge_errors(estimated, truth) -> int:
    """Number of comparisons whose orientation differs between two response graphs."""
    if set(estimated.edges) != set(truth.edges) or len(estimated.states) != len(truth.states):
        raise InputError("graphs are over different states or comparisons")
    return sum(1 for key, o in truth.edges.items() if estimated.edges[key] != o)


def ranking_from_distribution(dist, tie_tol: float = 1e-8, states=None) -> PartialRanking:
    """Buckets of states in decreasing mass; masses within ``tie_tol`` of a bucket's
    leading mass join that bucket."""
    if isinstance(dist, RankingDistribution):
        pi, states = dist.pi, dist.states
    else:
        pi = np.asarray(dist, float)
        states = list(range(len(pi))) if states is None else list(states)
    return PartialRanking([[states[i] for i in g] for g in order_by_mass(pi, tie_tol)])


def gap_distribution(game: PayoffTensor) -> np.ndarray:
    """Absolute payoff difference of the deviating player for every single-deviation comparison."""
    _, src, dst, diff, _ = _comparisons(game, MULTI)
    return np.abs(diff[src < dst])


def write_gaps_csv(gaps, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["gap"])
        for g in gaps:
            w.writerow([repr(float(g))])
