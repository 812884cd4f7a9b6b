import csv
import json
import math

import numpy as np
import pytest

from metaeval.cli import main
from metaeval.game import load_table, save_table


def run(capsys, *argv):
    code = main(list(map(str, argv)))
    out = capsys.readouterr()
    return code, out.out, out.err


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def sink_game_file(tmp_path, sink_game):
    path = tmp_path / "sink_game.json"
    save_table(sink_game, path)
    return path


def test_gen_game_then_alpharank(tmp_path, capsys):
    code, _, _ = run(capsys, "gen-game", "--n", 3, "--seed", 4, "--out", tmp_path / "g")
    assert code == 0
    game = load_table(tmp_path / "g" / "game.json")
    assert game.shape.strategy_counts == (3, 3)
    code, _, _ = run(capsys, "alpharank", "--table", tmp_path / "g" / "game.json", "--out", tmp_path / "r")
    assert code == 0
    doc = json.loads((tmp_path / "r" / "ranking.json").read_text())
    assert math.isclose(sum(doc["pi"]), 1.0, abs_tol=1e-12)
    assert len(read_csv(tmp_path / "r" / "ordering.csv")) == 9
    cfg = json.loads((tmp_path / "r" / "config.json").read_text())
    assert cfg["m"] == 50 and cfg["seed"] == 0


def test_alpharank_sink_game_alpha_sweep(tmp_path, capsys, sink_game_file):
    code, _, _ = run(capsys, "alpharank", "--table", sink_game_file, "--alphas", 0.1, 10, "--out", tmp_path)
    assert code == 0
    rows = read_csv(tmp_path / "alpha_sweep.csv")
    assert [r["alpha"] for r in rows] == ["0.1", "10.0"]
    assert all(r["top_states"] == "0-0" for r in rows)
    assert (tmp_path / "alpha_10.0" / "ranking.json").exists()


def test_config_file_and_flag_precedence(tmp_path, capsys):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"n": 2, "gap": 0.2, "seed": 7}))
    code, _, _ = run(capsys, "gen-game", "--config", conf, "--gap", 0.3, "--out", tmp_path / "o")
    assert code == 0
    cfg = json.loads((tmp_path / "o" / "config.json").read_text())
    assert (cfg["n"], cfg["gap"], cfg["seed"]) == (2, 0.3, 7)
    game = load_table(tmp_path / "o" / "game.json")
    assert game.shape.strategy_counts == (2, 2)


def test_reruns_byte_identical(tmp_path, capsys, sink_game_file):
    for d in ("a", "b"):
        assert run(capsys, "rgucb", "--table", sink_game_file, "--seed", 3, "--out", tmp_path / d)[0] == 0
    for name in ("history.jsonl", "summary.json", "estimated_table.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_rgucb_reports(tmp_path, capsys, sink_game_file):
    code, out, _ = run(capsys, "rgucb", "--table", sink_game_file, "--symmetric", "--out", tmp_path)
    assert code == 0 and "samples" in out
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["edge_errors"] == 0 and not summary["truncated"]


def test_sweep_rgucb(tmp_path, capsys, sink_game_file):
    code, _, _ = run(capsys, "sweep-rgucb", "--table", sink_game_file, "--trials", 3, "--deltas", 0.1, 0.3,
                     "--out", tmp_path)
    assert code == 0
    assert len(read_csv(tmp_path / "samples.csv")) == 6
    assert len(read_csv(tmp_path / "summary.csv")) == 2
    assert (tmp_path / "cells" / "UE_UCB_0.1.csv").exists()


def test_uncertainty(tmp_path, capsys, sink_game_file):
    code, _, _ = run(capsys, "uncertainty", "--table", sink_game_file, "--halfwidths", 0, 0.2, "--out", tmp_path)
    assert code == 0
    rows = read_csv(tmp_path / "intervals.csv")
    assert len(rows) == 8
    first = rows[0]
    assert (first["state"], float(first["pi_lo"]), float(first["pi_hi"])) == ("0-0", 1.0, 1.0)


def test_elo_from_records(tmp_path, capsys):
    rec = tmp_path / "r.csv"
    rec.write_text("a,b,u\n0,1,1\n0,1,1\n0,1,1\n0,1,0\n")
    code, _, _ = run(capsys, "elo", "--records", rec, "--out", tmp_path / "o")
    assert code == 0
    ratings = json.loads((tmp_path / "o" / "ratings.json").read_text())
    assert ratings["ratings"][0] - ratings["ratings"][1] == pytest.approx(math.log(3), abs=1e-6)


@pytest.mark.parametrize("argv,expected", [
    (["--kind", "infinite", "--strategies", 2, 2, "--gap", 0.1], "4061"),
    (["--kind", "elo", "--strategies", 10, "--epsilon", 0.1, "--delta", 0.1], "34539"),
])
def test_bounds(tmp_path, capsys, argv, expected):
    code, out, _ = run(capsys, "bounds", *argv, "--out", tmp_path)
    assert code == 0 and f"N = {expected}" in out
    assert str(json.loads((tmp_path / "bounds.json").read_text())["samples_per_profile"]) == expected


def test_completion_and_rank_error(tmp_path, capsys):
    code, _, _ = run(capsys, "completion", "--n", 5, "--trials", 2, "--ranks", 1, "--obs-rates", 0.6, 1.0,
                     "--transforms", "logit", "--iters", 50, "--out", tmp_path / "c")
    assert code == 0
    assert len(read_csv(tmp_path / "c" / "grid.csv")) == 4
    code, _, _ = run(capsys, "rank-error", "--n", 2, "--trials", 2, "--checkpoints", 3, "--out", tmp_path / "e")
    assert code == 0
    assert len(read_csv(tmp_path / "e" / "trajectory.csv")) == 6


def test_exit_codes(tmp_path, capsys):
    code, _, err = run(capsys, "alpharank", "--table", tmp_path / "missing.json", "--out", tmp_path)
    assert code == 2 and err
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"payoffs": [[1, 2]]}))
    assert run(capsys, "alpharank", "--table", bad, "--out", tmp_path)[0] == 2
    assert run(capsys, "no-such-command")[0] == 2
    assert run(capsys, "bounds", "--kind", "infinite", "--delta", 2.0, "--gap", 0.1, "--out", tmp_path)[0] == 2
