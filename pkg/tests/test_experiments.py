import numpy as np
import pytest

from metaeval.experiments import (CommonOutcomeSimulator, completion_grid, median_by, nonincreasing,
                                  rank_error_trajectory, sweep_rgucb, trial_game, uncertainty_sweep)
from metaeval.game import BernoulliSimulator, make_rng


def test_common_outcomes_ignore_visit_order(sink_game):
    a = CommonOutcomeSimulator(BernoulliSimulator(sink_game), (1, 2, 3))
    b = CommonOutcomeSimulator(BernoulliSimulator(sink_game), (1, 2, 3))
    seq_a = [a.sample(1) for _ in range(5)] + [a.sample(2) for _ in range(5)]
    seq_b = [b.sample(2) for _ in range(5)] + [b.sample(1) for _ in range(5)]
    assert seq_a[:5] == seq_b[5:] and seq_a[5:] == seq_b[:5]


def test_trial_game_deterministic(sink_game):
    assert trial_game(4, 2) == trial_game(4, 2)
    assert trial_game(4, 2) != trial_game(4, 3)
    assert trial_game(4, 2, table=sink_game) is sink_game


def test_sweep_rows_and_workers(sink_game):
    rows = sweep_rgucb(["UE", "CW"], ["UCB"], [0.1, 0.3], trials=2, seed=0, table=sink_game)
    assert len(rows) == 8
    assert all(r["edge_errors"] == 0 for r in rows)
    again = sweep_rgucb(["UE", "CW"], ["UCB"], [0.1, 0.3], trials=2, seed=0, table=sink_game, workers=2)
    assert rows == again
    med = median_by(rows, ["scheme", "delta"], "samples")
    assert [(m["scheme"], m["delta"], m["count"]) for m in med] == [("UE", 0.1, 2), ("UE", 0.3, 2),
                                                                    ("CW", 0.1, 2), ("CW", 0.3, 2)]


def test_larger_delta_fewer_samples_on_common_numbers(sink_game):
    # on shared outcome streams the looser level stops no later, trial by trial
    rows = sweep_rgucb(["CW"], ["UCB"], [0.05, 0.2], trials=5, seed=1, table=sink_game)
    by_trial = {}
    for r in rows:
        by_trial.setdefault(r["trial"], {})[r["delta"]] = r["samples"]
    assert all(v[0.2] <= v[0.05] for v in by_trial.values())


def test_trajectory_layout():
    rows = rank_error_trajectory(2, 0, n=2, checkpoints=4)
    assert len(rows) == 8
    for t in (0, 1):
        mine = [r for r in rows if r["trial"] == t]
        assert mine[-1]["normalized"] == 1.0
        assert [r["samples"] for r in mine] == sorted(r["samples"] for r in mine)


def test_uncertainty_sweep_nested(sink_game):
    rows = uncertainty_sweep(sink_game, [0.0, 0.1, 0.4])
    assert len(rows) == 12
    widths = {w: sum(iv.width for lvl, iv in rows if lvl == w) for w in (0.0, 0.1, 0.4)}
    assert widths[0.0] == 0.0 and widths[0.0] <= widths[0.1] <= widths[0.4]


def test_completion_grid_shape():
    rng = make_rng(0)
    truth = 1 / (1 + np.exp(-np.outer(rng.standard_normal(4), rng.standard_normal(4))))
    rows = completion_grid(truth, ["logit", "payoff"], [1], [0.7, 1.0], trials=2, seed=0, iters=30)
    assert len(rows) == 8
    assert all(r[4] == 0 for r in rows if r[2] == 1.0)


def test_helpers():
    assert nonincreasing([3, 2, 2, 1]) and not nonincreasing([1, 2])
    assert nonincreasing([1, 1.05], slack=0.1)
