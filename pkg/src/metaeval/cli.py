"""Command-line entry point: ``metaeval <subcommand> [--config FILE] [flags]``.

Every subcommand resolves its parameters as built-in defaults, then the JSON
config file, then explicit flags (flags win). The resolved parameters are
written to ``config.json`` in the output directory, so a run can be repeated
from that file and the master seed alone.

Exit status: 0 on success, 1 on a runtime failure (e.g. non-convergence),
2 on a usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np
from scipy.special import expit

from metaeval import experiments as ex
from metaeval.alpharank import (MULTI, SINGLE, AlphaRankParams, ComplexityInstance, alpharank,
                                finite_alpha_epsilon_cap, response_graph, sample_complexity_finite_alpha,
                                sample_complexity_infinite_alpha, surjection_sum)
from metaeval.completion import TRANSFORMS, write_grid_csv
from metaeval.elo import OutcomeBatch, batch_elo_fit, elo_sample_complexity
from metaeval.errors import InputError
from metaeval.game import BernoulliSimulator, GameShape, PayoffTensor, load_table, make_rng, save_table
from metaeval.metrics import edge_errors
from metaeval.rgucb import CRITERIA, SCHEMES, run_response_graph_ucb, run_symmetric_rgucb
from metaeval.uncertainty import PayoffBounds, all_ranking_intervals, write_intervals_csv

logger = logging.getLogger("metaeval")

COMMON = {"seed": 0, "trials": 20, "out": None, "budget": 100_000}

DEFAULTS = {
    "alpharank": {"table": None, "alpha": "inf", "alphas": None, "m": 50, "perturbation": None,
                  "population_mode": "multi"},
    "rgucb": {"table": None, "n": 4, "gap": 0.1, "min_margin": None, "delta": 0.1, "scheme": "UE",
              "criterion": "UCB", "epsilon_relax": None, "symmetric": False},
    "sweep-rgucb": {"table": None, "n": 4, "gap": 0.1, "min_margin": None,
                    "deltas": [0.05, 0.1, 0.15, 0.2, 0.25, 0.3], "schemes": ["UE"], "criteria": ["UCB"],
                    "symmetric": False, "workers": 1},
    "uncertainty": {"table": None, "lower": None, "upper": None, "halfwidths": [0.0, 0.05, 0.1, 0.2],
                    "clip": None, "m": 50, "population_mode": "multi"},
    "elo": {"table": None, "records": None, "counts": 1, "reg": 1e-9},
    "bounds": {"kind": "infinite", "strategies": [4, 4], "delta": 0.1, "gap": None, "alpha": None,
               "m": 50, "epsilon": None, "m_max": 1.0, "eta": None},
    "gen-game": {"n": 4, "gap": 0.1, "min_margin": None},
    "completion": {"table": None, "n": 8, "transforms": list(TRANSFORMS), "ranks": [1, 2],
                   "obs_rates": [0.2, 0.4, 0.6, 0.8, 1.0], "iters": 200},
    "rank-error": {"table": None, "n": 3, "gap": 0.1, "min_margin": None, "delta": 0.1, "scheme": "UE",
                   "criterion": "UCB", "checkpoints": 11, "workers": 1},
}


# --- helpers ---------------------------------------------------------------

def _alpha(text):
    if isinstance(text, (int, float)):
        return float(text)
    if str(text).lower() in ("inf", "infinity"):
        return math.inf
    return float(text)


def _mode(name):
    return {"multi": MULTI, MULTI: MULTI, "single": SINGLE, SINGLE: SINGLE}.get(name) or _bad(
        f"unknown population mode {name!r}")


def _bad(msg):
    raise InputError(msg)


def _resolve(command, args) -> dict:
    cfg = dict(COMMON)
    cfg.update(DEFAULTS[command])
    if args.config:
        path = Path(args.config)
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: malformed JSON config ({exc})") from exc
        if not isinstance(doc, dict):
            raise InputError(f"{path}: config must be a JSON object")
        for key, value in doc.items():
            key = key.replace("-", "_")
            if key not in cfg:
                raise InputError(f"{path}: unknown config key {key!r} for {command}")
            cfg[key] = value
    for key, value in vars(args).items():
        if key in cfg and value is not None:
            cfg[key] = value
    if "min_margin" in cfg and cfg["min_margin"] is None:
        # generated games separate every deviation by at least the gap unless told otherwise
        cfg["min_margin"] = cfg["gap"]
    if cfg["out"] is None:
        cfg["out"] = str(Path("metaeval-out") / command)
    cfg["command"] = command
    return cfg


def _outdir(cfg) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(cfg, indent=1, sort_keys=True) + "\n")
    return out


def _table(cfg, key="table"):
    path = cfg.get(key)
    return None if path is None else load_table(path)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _state_name(s):
    return "-".join(map(str, s)) if isinstance(s, tuple) else str(s)


def _params(cfg, alpha=None) -> AlphaRankParams:
    return AlphaRankParams(alpha=_alpha(cfg.get("alpha", "inf") if alpha is None else alpha),
                           m=int(cfg.get("m", 50)), perturbation=cfg.get("perturbation"),
                           population_mode=_mode(cfg.get("population_mode", "multi")))


# --- subcommands -----------------------------------------------------------

def cmd_alpharank(cfg) -> int:
    game = _table(cfg)
    if game is None:
        raise InputError("alpharank needs --table")
    out = _outdir(cfg)

    def write(dist, where):
        where.mkdir(parents=True, exist_ok=True)
        (where / "ranking.json").write_text(dist.to_json() + "\n")
        ranks = dist.ranks()
        order = np.argsort(-dist.pi, kind="stable")
        _write_csv(where / "ordering.csv", ["rank", "state", "mass"],
                   [[ranks[dist.states[i]], _state_name(dist.states[i]), repr(float(dist.pi[i]))] for i in order])

    if cfg["alphas"]:
        rows, prev = [], None
        for a in cfg["alphas"]:
            dist = alpharank(game, _params(cfg, a))
            write(dist, out / f"alpha_{a}")
            top = dist.ordering[0]
            rows.append([a, dist.params.get("converged", ""), dist.params.get("perturbation_used", ""),
                         " ".join(_state_name(s) for s in top), repr(float(dist.mass(top[0]))),
                         "" if prev is None else int(dist.ordering != prev)])
            prev = dist.ordering
        _write_csv(out / "alpha_sweep.csv",
                   ["alpha", "converged", "perturbation_used", "top_states", "top_mass", "ordering_changed"], rows)
        print(f"wrote {len(rows)} rankings to {out}")
        return 0
    dist = alpharank(game, _params(cfg))
    write(dist, out)
    for r, group in enumerate(dist.ordering[:10]):
        print(f"{r + 1:>3}  {' '.join(_state_name(s) for s in group)}  {dist.mass(group[0]):.6g}")
    return 0


def _game_for(cfg, trial=0) -> PayoffTensor:
    table = _table(cfg)
    return ex.trial_game(cfg["seed"], trial, table, int(cfg["n"]), float(cfg["gap"]), float(cfg["min_margin"]))


def cmd_rgucb(cfg) -> int:
    game = _game_for(cfg)
    out = _outdir(cfg)
    sim = BernoulliSimulator(game)
    runner = run_symmetric_rgucb if cfg["symmetric"] else run_response_graph_ucb
    res = runner(sim, game.shape, float(cfg["delta"]), cfg["scheme"], cfg["criterion"], int(cfg["budget"]),
                 make_rng(cfg["seed"], 0, ex.RUN_STREAM), cfg["epsilon_relax"])
    res.write_history(out / "history.jsonl")
    errors = edge_errors(res.graph, response_graph(game))
    summary = dict(res.summary(), edge_errors=errors)
    (out / "summary.json").write_text(json.dumps(summary, indent=1) + "\n")
    save_table(res.estimated_table(), out / "estimated_table.json")
    print(f"samples={res.total_samples} truncated={res.truncated} edge_errors={errors}")
    return 0


def cmd_sweep_rgucb(cfg) -> int:
    table = _table(cfg)
    for s in cfg["schemes"]:
        if s.upper() not in SCHEMES:
            raise InputError(f"unknown scheme {s!r}")
    for c in cfg["criteria"]:
        if c.upper() not in CRITERIA:
            raise InputError(f"unknown criterion {c!r}")
    out = _outdir(cfg)
    rows = ex.sweep_rgucb(cfg["schemes"], cfg["criteria"], [float(d) for d in cfg["deltas"]], int(cfg["trials"]),
                          int(cfg["seed"]), int(cfg["budget"]), table, int(cfg["n"]), float(cfg["gap"]),
                          float(cfg["min_margin"]), bool(cfg["symmetric"]), int(cfg["workers"]))
    header = ["scheme", "criterion", "delta", "trial", "samples", "edge_errors", "truncated"]
    cells = out / "cells"
    cells.mkdir(exist_ok=True)
    grouped: dict = {}
    for r in rows:
        grouped.setdefault((r["scheme"], r["criterion"], r["delta"]), []).append(r)
    for (s, c, d), group in grouped.items():
        _write_csv(cells / f"{s}_{c}_{d}.csv", header, [[r[h] for h in header] for r in group])
    _write_csv(out / "samples.csv", header, [[r[h] for h in header] for r in rows])
    summary = []
    for (s, c, d), group in grouped.items():
        summary.append([s, c, d, len(group), float(np.median([r["samples"] for r in group])),
                        float(np.median([r["edge_errors"] for r in group])),
                        sum(r["truncated"] for r in group)])
    _write_csv(out / "summary.csv", ["scheme", "criterion", "delta", "trials", "median_samples",
                                     "median_edge_errors", "truncated_runs"], summary)
    for row in summary:
        print(" ".join(map(str, row)))
    return 0


def cmd_uncertainty(cfg) -> int:
    params = _params(cfg)
    out = _outdir(cfg)
    path = out / "intervals.csv"
    if cfg["lower"] or cfg["upper"]:
        if not (cfg["lower"] and cfg["upper"]):
            raise InputError("--lower and --upper must be given together")
        bounds = PayoffBounds(_table(cfg, "lower").payoffs, _table(cfg, "upper").payoffs)
        write_intervals_csv(all_ranking_intervals(bounds, params), path, level="given")
        return 0
    game = _table(cfg)
    if game is None:
        raise InputError("uncertainty needs --table or --lower/--upper")
    clip = cfg["clip"]
    if clip is None and game.payoffs.min() >= 0 and game.payoffs.max() <= 1:
        clip = (0.0, 1.0)
    rows = ex.uncertainty_sweep(game, [float(w) for w in cfg["halfwidths"]], params, clip)
    write_intervals_csv(rows, path)
    print(f"wrote {len(rows)} intervals to {path}")
    return 0


def _read_records(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"a", "b", "u"} <= set(reader.fieldnames):
            raise InputError(f"{path}: expected columns a, b, u")
        recs = list(reader)
    names = sorted({r["a"] for r in recs} | {r["b"] for r in recs})
    idx = {n: i for i, n in enumerate(names)}
    try:
        return OutcomeBatch.from_records([(idx[r["a"]], idx[r["b"]], float(r["u"])) for r in recs],
                                         len(names), names)
    except ValueError as exc:
        raise InputError(f"{path}: bad outcome value ({exc})") from exc


def cmd_elo(cfg) -> int:
    if cfg["records"]:
        if not Path(cfg["records"]).exists():
            raise FileNotFoundError(f"records file not found: {cfg['records']}")
        batch = _read_records(cfg["records"])
    else:
        game = _table(cfg)
        if game is None:
            raise InputError("elo needs --table or --records")
        if game.num_players != 2 or not game.shape.is_square():
            raise InputError("elo needs a square two-player win-rate table")
        p = game.payoffs[0]
        if p.min() < 0 or p.max() > 1:
            raise InputError("win rates must lie in [0, 1]")
        batch = OutcomeBatch.from_win_matrix(p, cfg["counts"], game.strategy_labels()[0])
    out = _outdir(cfg)
    ratings = batch_elo_fit(batch, float(cfg["reg"]))
    (out / "ratings.json").write_text(ratings.to_json() + "\n")
    pred = ratings.predict_matrix()
    _write_csv(out / "predictions.csv", ["strategy"] + ratings.strategies,
               [[s] + [repr(float(x)) for x in row] for s, row in zip(ratings.strategies, pred)])
    if ratings.uncovered:
        logger.warning("pairs never played: %s", ratings.uncovered)
    for s, r in zip(ratings.strategies, ratings.ratings):
        print(f"{s}\t{r:.6f}")
    return 0


def cmd_bounds(cfg) -> int:
    kind = cfg["kind"]
    counts = [int(c) for c in cfg["strategies"]]
    out = _outdir(cfg)
    result = {"kind": kind}
    if kind == "elo":
        n = counts[0]
        eps, delta = cfg["epsilon"], float(cfg["delta"])
        if eps is None:
            raise InputError("elo bound needs --epsilon")
        value = elo_sample_complexity(n, float(eps), delta)
        formula = f"0.5 * {n}^2 * ln({n}^2 / {delta}) / {eps}^2 = {0.5 * n * n * math.log(n * n / delta) / eps ** 2:.6g}"
    else:
        shape = GameShape(tuple(counts))
        inst = ComplexityInstance(shape, float(cfg["m_max"]), float(cfg["delta"]),
                                  None if cfg["alpha"] is None else float(cfg["alpha"]),
                                  None if cfg["m"] is None else int(cfg["m"]),
                                  None if cfg["epsilon"] is None else float(cfg["epsilon"]),
                                  None if cfg["gap"] is None else float(cfg["gap"]),
                                  None if cfg["eta"] is None else float(cfg["eta"]))
        s, k = shape.num_profiles, shape.num_players
        if kind == "infinite":
            value = sample_complexity_infinite_alpha(inst)
            formula = (f"8 * {inst.gap}^-2 * {inst.m_max}^2 * ln(2 * {s} * {k} / {inst.delta}) = "
                       f"{8 * inst.m_max ** 2 * math.log(2 * s * k / inst.delta) / inst.gap ** 2:.6g}")
        elif kind == "finite":
            value = sample_complexity_finite_alpha(inst)
            formula = (f"648 M^2 ln(2|S|K/delta) (L / (eps g))^2 * (sum)^2 with |S|={s}, K={k}, "
                       f"alpha={inst.alpha}, m={inst.m}, eps={inst.epsilon}, eta={inst.eta_value:.6g}, "
                       f"sum={surjection_sum(s)}, eps cap={finite_alpha_epsilon_cap(s):.6g}")
        else:
            raise InputError(f"unknown bound kind {kind!r}")
        result["num_profiles"] = s
    result.update({"samples_per_profile": value, "formula": formula})
    (out / "bounds.json").write_text(json.dumps(result, indent=1) + "\n")
    print(f"N = {value}")
    print(formula)
    return 0


def cmd_gen_game(cfg) -> int:
    out = _outdir(cfg)
    game = ex.trial_game(cfg["seed"], 0, None, int(cfg["n"]), float(cfg["gap"]), float(cfg["min_margin"]))
    save_table(game, out / "game.json")
    print(out / "game.json")
    return 0


def _rank_one_truth(n, seed):
    rng = make_rng(seed, 0, ex.GAME_STREAM)
    return expit(np.outer(rng.standard_normal(n), rng.standard_normal(n)))


def cmd_completion(cfg) -> int:
    game = _table(cfg)
    if game is not None:
        if game.num_players != 2:
            raise InputError("completion needs a two-player table")
        truth = game.payoffs[0]
    else:
        truth = _rank_one_truth(int(cfg["n"]), int(cfg["seed"]))
    if truth.min() < 0 or truth.max() > 1:
        raise InputError("completion expects win rates in [0, 1]")
    for t in cfg["transforms"]:
        if t not in TRANSFORMS:
            raise InputError(f"unknown transform {t!r}")
    out = _outdir(cfg)
    rows = ex.completion_grid(truth, cfg["transforms"], [int(r) for r in cfg["ranks"]],
                              [float(x) for x in cfg["obs_rates"]], int(cfg["trials"]), int(cfg["seed"]),
                              iters=int(cfg["iters"]))
    write_grid_csv(rows, out / "grid.csv")
    dicts = [dict(zip(["transform", "rank", "obs_rate", "seed", "kendall_error"], r)) for r in rows]
    summary = ex.median_by(dicts, ["transform", "rank", "obs_rate"], "kendall_error")
    _write_csv(out / "summary.csv", ["transform", "rank", "obs_rate", "median_kendall_error", "trials"],
               [[d["transform"], d["rank"], d["obs_rate"], d["median_kendall_error"], d["count"]] for d in summary])
    return 0


def cmd_rank_error(cfg) -> int:
    table = _table(cfg)
    out = _outdir(cfg)
    rows = ex.rank_error_trajectory(int(cfg["trials"]), int(cfg["seed"]), float(cfg["delta"]), cfg["scheme"],
                                    cfg["criterion"], int(cfg["budget"]), table, int(cfg["n"]), float(cfg["gap"]),
                                    float(cfg["min_margin"]), int(cfg["checkpoints"]), workers=int(cfg["workers"]))
    header = ["trial", "checkpoint", "samples", "normalized", "frobenius", "kendall"]
    _write_csv(out / "trajectory.csv", header, [[r[h] for h in header] for r in rows])
    # checkpoints are evenly spaced per trial, so group by checkpoint position
    per_trial: dict = {}
    for r in rows:
        per_trial.setdefault(r["trial"], []).append(r)
    n_cp = min(len(v) for v in per_trial.values())
    summary = []
    for i in range(n_cp):
        pts = [v[i] for v in per_trial.values()]
        summary.append([float(np.median([p["normalized"] for p in pts])),
                        float(np.median([p["frobenius"] for p in pts])),
                        float(np.median([p["kendall"] for p in pts]))])
    _write_csv(out / "summary.csv", ["normalized", "median_frobenius", "median_kendall"], summary)
    return 0


COMMANDS = {
    "alpharank": cmd_alpharank, "rgucb": cmd_rgucb, "sweep-rgucb": cmd_sweep_rgucb,
    "uncertainty": cmd_uncertainty, "elo": cmd_elo, "bounds": cmd_bounds, "gen-game": cmd_gen_game,
    "completion": cmd_completion, "rank-error": cmd_rank_error,
}


# --- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="metaeval", description="Rank agents in noisy meta-games.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON file of parameters; flags override it")
        p.add_argument("--seed", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--out", help="output directory")
        p.add_argument("--budget", type=int, help="cap on simulated matches per run")
        return p

    def game_source(p, n_help="strategies per player of generated games"):
        p.add_argument("--table", help="payoff table (.json, or .csv stem for two players)")
        p.add_argument("--n", type=int, help=n_help)
        p.add_argument("--gap", type=float)
        p.add_argument("--min-margin", type=float)

    p = add("alpharank", "rank the profiles of a payoff table")
    p.add_argument("--table")
    p.add_argument("--alpha")
    p.add_argument("--alphas", nargs="+", type=float, help="write one ranking per alpha")
    p.add_argument("--m", type=int)
    p.add_argument("--perturbation", type=float)
    p.add_argument("--population-mode", choices=["multi", "single"])

    p = add("rgucb", "adaptive sampling of one game")
    game_source(p)
    p.add_argument("--delta", type=float)
    p.add_argument("--scheme", choices=SCHEMES)
    p.add_argument("--criterion", choices=list(CRITERIA))
    p.add_argument("--epsilon-relax", type=float)
    p.add_argument("--symmetric", action="store_const", const=True)

    p = add("sweep-rgucb", "scheme x criterion x delta x trial grid")
    game_source(p)
    p.add_argument("--deltas", nargs="+", type=float)
    p.add_argument("--schemes", nargs="+")
    p.add_argument("--criteria", nargs="+")
    p.add_argument("--symmetric", action="store_const", const=True)
    p.add_argument("--workers", type=int)

    p = add("uncertainty", "ranking-weight intervals under payoff uncertainty")
    p.add_argument("--table")
    p.add_argument("--lower")
    p.add_argument("--upper")
    p.add_argument("--halfwidths", nargs="+", type=float)
    p.add_argument("--clip", nargs=2, type=float)
    p.add_argument("--m", type=int)
    p.add_argument("--population-mode", choices=["multi", "single"])

    p = add("elo", "batch Elo ratings")
    p.add_argument("--table", help="square two-player table; player 1's payoffs are win rates")
    p.add_argument("--records", help="CSV with columns a, b, u")
    p.add_argument("--counts", type=float, help="games per cell when fitting a win-rate table")
    p.add_argument("--reg", type=float)

    p = add("bounds", "sample-complexity calculators")
    p.add_argument("--kind", choices=["infinite", "finite", "elo"])
    p.add_argument("--strategies", nargs="+", type=int, help="strategy count per player (elo: one number)")
    p.add_argument("--delta", type=float)
    p.add_argument("--gap", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--m", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--m-max", type=float)
    p.add_argument("--eta", type=float)

    p = add("gen-game", "write a generated Bernoulli game")
    p.add_argument("--n", type=int)
    p.add_argument("--gap", type=float)
    p.add_argument("--min-margin", type=float)

    p = add("completion", "low-rank completion then ranking, over a grid")
    p.add_argument("--table")
    p.add_argument("--n", type=int, help="size of the generated rank-1 logit truth")
    p.add_argument("--transforms", nargs="+", choices=TRANSFORMS)
    p.add_argument("--ranks", nargs="+", type=int)
    p.add_argument("--obs-rates", nargs="+", type=float)
    p.add_argument("--iters", type=int)

    p = add("rank-error", "payoff and ranking error along sampling runs")
    game_source(p)
    p.add_argument("--delta", type=float)
    p.add_argument("--scheme", choices=SCHEMES)
    p.add_argument("--criterion", choices=list(CRITERIA))
    p.add_argument("--checkpoints", type=int)
    p.add_argument("--workers", type=int)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _resolve(args.command, args)
        return COMMANDS[args.command](cfg)
    except (InputError, FileNotFoundError, IsADirectoryError, NotADirectoryError) as exc:
        print(f"metaeval {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - report and map to the runtime-failure status
        print(f"metaeval {args.command}: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
