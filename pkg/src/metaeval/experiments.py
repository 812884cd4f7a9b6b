"""Experiment drivers: sampler sweeps, ranking-error trajectories and uncertainty sweeps.

Every stochastic routine derives trial ``t``'s generator as ``make_rng(seed, t)``
(plus a fixed stream tag per purpose), so results depend only on the inputs.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from metaeval.alpharank import AlphaRankParams, alpharank, response_graph
from metaeval.completion import MaskedMatrix, complete_and_rank, random_mask
from metaeval.game import (BernoulliSimulator, OutcomeSimulator, PayoffTensor, generate_bernoulli_game,
                           make_rng)
from metaeval.metrics import edge_errors, kendall_partial, ranking_from_distribution
from metaeval.rgucb import run_response_graph_ucb, run_symmetric_rgucb
from metaeval.uncertainty import PayoffBounds, all_ranking_intervals

GAME_STREAM = 0
RUN_STREAM = 1
MASK_STREAM = 2
OUTCOME_STREAM = 3

__all__ = ["CommonOutcomeSimulator", "trial_game", "sweep_rgucb", "rank_error_trajectory", "uncertainty_sweep", "completion_grid",
           "median_by"]


def trial_game(seed: int, trial: int, table: PayoffTensor | None = None, n: int = 4, gap: float = 0.1,
               min_margin: float = 0.0) -> PayoffTensor:
    """The user table if given, otherwise the generated game for ``(seed, trial)``."""
    if table is not None:
        return table
    return generate_bernoulli_game(n, gap, make_rng(seed, trial, GAME_STREAM), min_margin=min_margin)


class CommonOutcomeSimulator(OutcomeSimulator):
    """Wraps a simulator so each profile draws from its own fixed stream.

    The ``i``-th match of profile ``p`` has the same outcome in every run that
    shares ``key``, whatever order profiles are visited in. Sweeps use this to
    compare cells (different delta, criterion, scheme) on common random
    numbers; the generator passed to :meth:`sample` is ignored.
    """

    def __init__(self, base: OutcomeSimulator, key):
        self.base = base
        self.shape = base.shape
        self.outcome_range = base.outcome_range
        self.symmetric = base.symmetric
        self._key = tuple(key)
        self._streams = {}

    def sample(self, profile, rng=None) -> list[float]:
        index = profile if isinstance(profile, (int, np.integer)) else self.shape.index(profile)
        stream = self._streams.get(index)
        if stream is None:
            stream = self._streams[index] = make_rng(*self._key, int(index))
        return self.base.sample(index, stream)


def _map(fn, jobs, workers):
    if workers and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def _sweep_cell(job):
    (seed, trial, scheme, criterion, delta, budget, table, n, gap, min_margin, symmetric) = job
    game = trial_game(seed, trial, table, n, gap, min_margin)
    sim = CommonOutcomeSimulator(BernoulliSimulator(game), (seed, trial, OUTCOME_STREAM))
    rng = make_rng(seed, trial, RUN_STREAM)
    runner = run_symmetric_rgucb if symmetric else run_response_graph_ucb
    res = runner(sim, game.shape, delta, scheme, criterion, budget, rng, record_history=False)
    truth = response_graph(game)
    return {"scheme": scheme, "criterion": criterion, "delta": delta, "trial": trial,
            "samples": res.total_samples, "edge_errors": edge_errors(res.graph, truth),
            "truncated": res.truncated}


def sweep_rgucb(schemes, criteria, deltas, trials: int, seed: int, budget: int = 100_000,
                table: PayoffTensor | None = None, n: int = 4, gap: float = 0.1, min_margin: float = 0.0,
                symmetric: bool = False, workers: int = 1) -> list[dict]:
    """One ResponseGraphUCB run per (scheme, criterion, delta, trial) cell.

    Trial ``t`` uses the same game for every cell (the user table or the
    game generated from ``(seed, t)``), the same scheduling stream and the
    same per-profile outcome streams, so differences between cells reflect
    the parameters rather than sampling luck.
    """
    jobs = [(seed, t, s, c, d, budget, table, n, gap, min_margin, symmetric)
            for s, c, d, t in itertools.product(schemes, criteria, deltas, range(trials))]
    return _map(_sweep_cell, jobs, workers)


def median_by(rows, keys, value):
    """Median of ``value`` grouped by the tuple of ``keys``, in first-seen order."""
    groups: dict = {}
    for r in rows:
        groups.setdefault(tuple(r[k] for k in keys), []).append(r[value])
    return [dict(zip(keys, k), **{f"median_{value}": float(np.median(v)), "count": len(v)})
            for k, v in groups.items()]


def _ranking(game, params):
    return ranking_from_distribution(alpharank(game, params), params.tie_tol)


def _trajectory_trial(job):
    seed, trial, scheme, criterion, delta, budget, table, n, gap, min_margin, checkpoints, params = job
    game = trial_game(seed, trial, table, n, gap, min_margin)
    sim = BernoulliSimulator(game)
    res = run_response_graph_ucb(sim, game.shape, delta, scheme, criterion, budget,
                                 make_rng(seed, trial, RUN_STREAM))
    truth_rank = _ranking(game, params)
    total = res.total_samples
    k_players, n_prof = game.num_players, game.shape.num_profiles
    lo, hi = sim.outcome_range
    sums = np.zeros((k_players, n_prof))
    counts = np.zeros(n_prof)
    marks = sorted({max(1, int(round(x * total))) for x in np.linspace(0, 1, checkpoints)})
    rows = []
    it = iter(res.history)
    done = 0
    dims = (k_players,) + game.shape.strategy_counts
    for step, mark in enumerate(marks):
        while done < mark:
            _, p, outcome, _ = next(it)
            sums[:, p] += outcome
            counts[p] += 1
            done += 1
        with np.errstate(invalid="ignore", divide="ignore"):
            means = np.where(counts > 0, sums / np.maximum(counts, 1), 0.5 * (lo + hi))
        est = PayoffTensor(means.reshape(dims), m_max=max(abs(lo), abs(hi), game.m_max))
        frob = float(np.linalg.norm(means - game.flat()))
        kend = kendall_partial(truth_rank, _ranking(est, params))
        rows.append({"trial": trial, "checkpoint": step, "samples": mark, "normalized": mark / total,
                     "frobenius": frob, "kendall": kend})
    return rows


def rank_error_trajectory(trials: int, seed: int, delta: float = 0.1, scheme: str = "UE",
                          criterion: str = "UCB", budget: int = 100_000, table: PayoffTensor | None = None,
                          n: int = 3, gap: float = 0.1, min_margin: float = 0.0, checkpoints: int = 11,
                          params: AlphaRankParams | None = None, workers: int = 1) -> list[dict]:
    """Payoff-table Frobenius error and Kendall ranking error along sampling runs.

    Each run's sample count is normalised to [0, 1]; errors are recorded at
    ``checkpoints`` evenly spaced fractions of the run, numbered by
    ``"checkpoint"`` so that runs of different lengths can be grouped.
    """
    params = params or AlphaRankParams()
    jobs = [(seed, t, scheme, criterion, delta, budget, table, n, gap, min_margin, checkpoints, params)
            for t in range(trials)]
    return [row for rows in _map(_trajectory_trial, jobs, workers) for row in rows]


def uncertainty_sweep(game: PayoffTensor, halfwidths, params: AlphaRankParams | None = None,
                      clip=(0.0, 1.0)) -> list[tuple[float, object]]:
    """Ranking intervals for bounds ``M -/+ w`` (clipped) at each half-width ``w``."""
    params = params or AlphaRankParams()
    out = []
    for w in halfwidths:
        bounds = PayoffBounds.around(game, w, clip)
        out.extend((w, iv) for iv in all_ranking_intervals(bounds, params))
    return out


def completion_grid(truth, transforms, ranks, obs_rates, trials: int, seed: int,
                    params: AlphaRankParams | None = None, iters: int = 200) -> list[tuple]:
    """Kendall error of completion-then-ranking for every grid cell and seed."""
    truth = np.asarray(truth, float)
    rows = []
    for rate_i, rate in enumerate(obs_rates):
        for t in range(trials):
            mask = random_mask(truth.shape, rate, make_rng(seed, t, MASK_STREAM, rate_i))
            for transform in transforms:
                values = np.clip(truth, 1e-6, 1 - 1e-6) if transform != "payoff" else truth
                for rank in ranks:
                    res = complete_and_rank(MaskedMatrix(values, mask, transform), rank, params,
                                            truth=truth, iters=iters)
                    rows.append((transform, rank, rate, t, res["kendall"]))
    return rows


def nonincreasing(values, slack: float = 0.0) -> bool:
    return all(b <= a + slack for a, b in zip(values, values[1:]))


def isclose_all(a, b, tol) -> bool:
    return all(math.isclose(x, y, rel_tol=0, abs_tol=tol) for x, y in zip(a, b))
