"""Batch Elo: logistic ratings fitted by maximum likelihood to a batch of match outcomes."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, log_expit

from metaeval.errors import ConvergenceError, InputError

__all__ = ["OutcomeBatch", "EloRatings", "batch_elo_fit", "elo_predict", "elo_sample_complexity"]


@dataclass
class OutcomeBatch:
    """Two-player outcomes ``(a, b, u)``: strategy ``a`` scored ``u`` in [0, 1] against ``b``."""

    a: np.ndarray
    b: np.ndarray
    u: np.ndarray
    n_strategies: int
    names: list = field(default_factory=list)

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=int)
        self.b = np.asarray(self.b, dtype=int)
        self.u = np.asarray(self.u, dtype=float)
        if not (self.a.shape == self.b.shape == self.u.shape) or self.a.ndim != 1:
            raise InputError("records must be three equal-length sequences")
        if np.any((self.u < 0) | (self.u > 1)):
            raise InputError("payoffs must lie in [0, 1]")
        if len(self.a) and (min(self.a.min(), self.b.min()) < 0
                            or max(self.a.max(), self.b.max()) >= self.n_strategies):
            raise InputError("strategy index out of range")
        if not self.names:
            self.names = [str(i) for i in range(self.n_strategies)]

    @classmethod
    def from_records(cls, records, n_strategies=None, names=None) -> "OutcomeBatch":
        recs = list(records)
        a = [r[0] for r in recs]
        b = [r[1] for r in recs]
        u = [r[2] for r in recs]
        if n_strategies is None:
            n_strategies = max(a + b) + 1 if recs else 0
        return cls(np.array(a, int), np.array(b, int), np.array(u, float), n_strategies, list(names or []))

    @classmethod
    def from_win_matrix(cls, p, counts=1, names=None) -> "OutcomeBatch":
        """Aggregate batch from win rates ``p[i, j]`` over ``counts[i, j]`` games (diagonal ignored).

        Each cell becomes one weighted record; the fit only depends on the
        totals, so this is equivalent to listing the games one by one.
        """
        p = np.asarray(p, dtype=float)
        n = p.shape[0]
        if p.shape != (n, n):
            raise InputError("win matrix must be square")
        counts = np.broadcast_to(np.asarray(counts, dtype=float), p.shape)
        if np.any(counts < 0):
            raise InputError("counts must be nonnegative")
        ii, jj = np.nonzero(~np.eye(n, dtype=bool) & (counts > 0))
        batch = cls(ii, jj, p[ii, jj], n, list(names or []))
        batch.weights = counts[ii, jj].astype(float)
        return batch

    def totals(self):
        """Per ordered pair: (i, j, wins, games)."""
        w = getattr(self, "weights", None)
        if w is None:
            w = np.ones(len(self.a))
        n = self.n_strategies
        key = self.a * n + self.b
        games = np.bincount(key, weights=w, minlength=n * n)
        wins = np.bincount(key, weights=w * self.u, minlength=n * n)
        idx = np.nonzero(games > 0)[0]
        return idx // n, idx % n, wins[idx], games[idx]

    def uncovered_pairs(self) -> list[tuple[int, int]]:
        i, j, _, _ = self.totals()
        seen = {(min(x, y), max(x, y)) for x, y in zip(i.tolist(), j.tolist())}
        n = self.n_strategies
        return [(x, y) for x in range(n) for y in range(x + 1, n) if (x, y) not in seen]


@dataclass
class EloRatings:
    strategies: list
    ratings: np.ndarray
    reg: float
    uncovered: list = field(default_factory=list)
    iterations: int = 0
    grad_norm: float = 0.0

    def index(self, s) -> int:
        if isinstance(s, (int, np.integer)) and 0 <= s < len(self.ratings):
            return int(s)
        try:
            return self.strategies.index(str(s))
        except ValueError:
            raise InputError(f"unknown strategy {s!r}") from None

    def predict_matrix(self) -> np.ndarray:
        r = self.ratings
        return expit(r[:, None] - r[None, :])

    def to_json(self) -> str:
        return json.dumps({"strategies": list(self.strategies), "ratings": [float(x) for x in self.ratings],
                           "reg": self.reg})

    @classmethod
    def from_json(cls, text: str) -> "EloRatings":
        doc = json.loads(text)
        return cls(list(doc["strategies"]), np.array(doc["ratings"], float), float(doc["reg"]))


def _objective(r, i, j, wins, games, reg):
    x = r[i] - r[j]
    total = r.sum()
    loss = -(wins * log_expit(x) + (games - wins) * log_expit(-x)).sum()
    return loss + reg * (r @ r) + 0.5 * total * total


def batch_elo_fit(batch: OutcomeBatch, reg: float = 1e-9, tol: float = 1e-8,
                  max_iter: int = 500) -> EloRatings:
    """Minimise the logistic cross-entropy of the outcomes plus ``reg * ||r||^2``.

    Newton's method with backtracking. Ratings are only identified up to a
    shift, so a quadratic penalty on their sum fixes the gauge; it vanishes at
    the optimum, and the result is mean-centred. Raises ``ConvergenceError``
    if the gradient's infinity norm is still above ``tol`` after ``max_iter``
    steps (e.g. a strategy that always wins with ``reg=0``).
    """
    if reg < 0:
        raise InputError("reg must be nonnegative")
    n = batch.n_strategies
    i, j, wins, games = batch.totals()
    if len(i) == 0:
        raise InputError("no outcomes to fit")
    played = np.zeros(n, bool)
    played[i] = played[j] = True
    if not played.all():
        missing = [batch.names[k] for k in np.nonzero(~played)[0]]
        raise InputError(f"strategies without any record: {missing}")
    r = np.zeros(n)
    grad_norm = math.inf
    for it in range(max_iter + 1):
        x = r[i] - r[j]
        q = expit(x)
        resid = games * q - wins
        grad = np.bincount(i, resid, n) - np.bincount(j, resid, n) + 2 * reg * r + r.sum()
        grad_norm = float(np.max(np.abs(grad)))
        if grad_norm < tol:
            break
        if it == max_iter:
            raise ConvergenceError(f"Elo fit stopped with gradient norm {grad_norm:.3e}", grad_norm)
        w = games * q * (1 - q)
        hess = np.zeros((n, n))
        np.add.at(hess, (i, i), w)
        np.add.at(hess, (j, j), w)
        np.add.at(hess, (i, j), -w)
        np.add.at(hess, (j, i), -w)
        hess += 2 * reg * np.eye(n) + 1.0
        step = np.linalg.solve(hess, -grad)
        f0 = _objective(r, i, j, wins, games, reg)
        slope = grad @ step
        # near the optimum the decrease drops below the objective's rounding
        # noise, so allow that much slack in the sufficient-decrease test
        noise = 64 * np.finfo(float).eps * max(abs(f0), 1.0)
        t = 1.0
        while t > 1e-12:
            cand = r + t * step
            if _objective(cand, i, j, wins, games, reg) <= f0 + 1e-4 * t * slope + noise:
                break
            t *= 0.5
        r = r + t * step
    r = r - r.mean()
    return EloRatings(list(batch.names), r, reg, batch.uncovered_pairs(), it, grad_norm)


def elo_predict(ratings: EloRatings, a, b) -> float:
    """Predicted probability that ``a`` beats ``b``: ``1 / (1 + exp(-(r_a - r_b)))``."""
    ia, ib = ratings.index(a), ratings.index(b)
    return float(expit(ratings.ratings[ia] - ratings.ratings[ib]))


def elo_sample_complexity(n_strategies: int, epsilon: float, delta: float) -> int:
    """Games per pair for row sums of fitted win rates to be within ``epsilon`` with
    probability ``1 - delta``: smallest integer above ``0.5 n^2 eps^-2 log(n^2 / delta)``."""
    if n_strategies < 1:
        raise InputError("need at least one strategy")
    if not 0 < epsilon < 1 or not 0 < delta < 1:
        raise InputError("epsilon and delta must lie in (0, 1)")
    n2 = n_strategies ** 2
    value = 0.5 * n2 * math.log(n2 / delta) / epsilon ** 2
    return math.floor(value) + 1
