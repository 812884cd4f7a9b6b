"""Low-rank completion of partially observed win-rate matrices, then ranking.

Completion can run on the win rates themselves, on their logits
``log(p / (1 - p))`` or on their odds ``p / (1 - p)``.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, logit

from metaeval.alpharank import MULTI, SINGLE, AlphaRankParams, alpharank
from metaeval.errors import InputError
from metaeval.game import PayoffTensor
from metaeval.metrics import kendall_partial, ranking_from_distribution

logger = logging.getLogger(__name__)

TRANSFORMS = ("payoff", "logit", "odds")
PAYOFF_CLIP = 1e-6
ODDS_FLOOR = 1e-9
RIDGE = 1e-10

__all__ = ["TRANSFORMS", "MaskedMatrix", "CompletionResult", "alternating_minimization",
           "forward_transform", "inverse_transform", "complete_and_rank", "random_mask"]


def forward_transform(p, transform: str):
    p = np.asarray(p, float)
    if transform == "payoff":
        return p.copy()
    if transform == "logit":
        return logit(p)
    if transform == "odds":
        return p / (1.0 - p)
    raise InputError(f"unknown transform {transform!r}")


def inverse_transform(x, transform: str, clip: bool = True):
    """Back to win rates; with ``clip`` the result lies in ``[1e-6, 1 - 1e-6]``."""
    x = np.asarray(x, float)
    if transform == "payoff":
        p = x.copy()
    elif transform == "logit":
        p = expit(x)
    elif transform == "odds":
        o = np.maximum(x, ODDS_FLOOR) if clip else x
        p = o / (1.0 + o)
    else:
        raise InputError(f"unknown transform {transform!r}")
    return np.clip(p, PAYOFF_CLIP, 1 - PAYOFF_CLIP) if clip else p


@dataclass
class MaskedMatrix:
    """Win-rate matrix with a boolean mask of observed entries."""

    values: np.ndarray
    mask: np.ndarray
    transform: str = "payoff"

    def __post_init__(self):
        self.values = np.asarray(self.values, float)
        self.mask = np.asarray(self.mask, bool)
        if self.values.ndim != 2 or self.mask.shape != self.values.shape:
            raise InputError("values and mask must be matrices of the same shape")
        if self.transform not in TRANSFORMS:
            raise InputError(f"unknown transform {self.transform!r}")
        obs = self.values[self.mask]
        if not np.all(np.isfinite(obs)):
            raise InputError("observed entries must be finite")
        if self.transform != "payoff" and np.any((obs <= 0) | (obs >= 1)):
            raise InputError(f"{self.transform} transform needs observed entries in (0, 1)")

    @property
    def observed_fraction(self) -> float:
        return float(self.mask.mean())

    def transformed(self) -> np.ndarray:
        out = np.zeros_like(self.values)
        out[self.mask] = forward_transform(self.values[self.mask], self.transform)
        return out


@dataclass
class CompletionResult:
    completed: np.ndarray
    objective: list
    left: np.ndarray
    right: np.ndarray
    warnings: list = field(default_factory=list)


def _objective(x, mask, a, b, ridge):
    r = (a @ b.T - x)[mask]
    return float(r @ r + ridge * (np.sum(a * a) + np.sum(b * b)))


def alternating_minimization(values, mask, rank: int, iters: int = 200, rng=None,
                             ridge: float = RIDGE, tol: float = 0.0,
                             init: str = "spectral") -> CompletionResult:
    """Fit ``A B^T`` to the observed entries of ``values`` by alternating least squares.

    Each half-step solves the ridge-stabilised normal equations of one factor
    exactly, so the tracked objective (observed squared error plus
    ``ridge * (|A|^2 + |B|^2)``) never increases. With ``init="spectral"``
    the factors start from the top-``rank`` singular pairs of the zero-filled
    matrix divided by the observed fraction; ``init="random"`` uses seeded
    standard normals scaled by ``1/sqrt(rank)`` (needs ``rng``). Rows or
    columns with fewer observations than ``rank`` are reported in
    ``warnings``.
    """
    x = np.asarray(values, float)
    mask = np.asarray(mask, bool)
    n, m = x.shape
    if not mask.any():
        raise InputError("no observed entries")
    if not 1 <= rank <= min(n, m):
        raise InputError(f"rank must lie in [1, {min(n, m)}], got {rank}")
    if init not in ("spectral", "random"):
        raise InputError(f"unknown initialisation {init!r}")
    if init == "random" and rng is None:
        raise InputError("random initialisation needs an explicit random generator")
    warnings = []
    few_rows = np.nonzero(mask.sum(axis=1) < rank)[0]
    few_cols = np.nonzero(mask.sum(axis=0) < rank)[0]
    if len(few_rows) or len(few_cols):
        msg = (f"underdetermined factors: rows {few_rows.tolist()} and columns {few_cols.tolist()} "
               f"have fewer than {rank} observations")
        logger.warning(msg)
        warnings.append(msg)
    xm = np.where(mask, x, 0.0)
    if init == "spectral":
        u, sv, vt = np.linalg.svd(xm / mask.mean())
        root = np.sqrt(sv[:rank])
        a = u[:, :rank] * root
        b = vt[:rank].T * root
    else:
        a = rng.standard_normal((n, rank)) / np.sqrt(rank)
        b = rng.standard_normal((m, rank)) / np.sqrt(rank)
    eye = ridge * np.eye(rank)
    history = [_objective(x, mask, a, b, ridge)]
    for _ in range(iters):
        for i in range(n):
            bi = b[mask[i]]
            a[i] = np.linalg.solve(bi.T @ bi + eye, bi.T @ xm[i, mask[i]])
        for j in range(m):
            aj = a[mask[:, j]]
            b[j] = np.linalg.solve(aj.T @ aj + eye, aj.T @ xm[mask[:, j], j])
        history.append(_objective(x, mask, a, b, ridge))
        if tol and history[-2] - history[-1] <= tol * max(history[-2], 1e-300):
            break
    return CompletionResult(a @ b.T, history, a, b, warnings)


def random_mask(shape, rate: float, rng, ensure_cover: bool = True) -> np.ndarray:
    """Bernoulli(``rate``) mask; with ``ensure_cover`` every row and column keeps an entry."""
    mask = rng.random(shape) < rate
    if ensure_cover:
        for i in np.nonzero(~mask.any(axis=1))[0]:
            mask[i, rng.integers(shape[1])] = True
        for j in np.nonzero(~mask.any(axis=0))[0]:
            mask[rng.integers(shape[0]), j] = True
    return mask


def _rank_matrix(p, params):
    game = PayoffTensor(np.stack([p, 1.0 - p]), m_max=1.0)
    return alpharank(game, params)


def default_params(shape) -> AlphaRankParams:
    mode = SINGLE if shape[0] == shape[1] else MULTI
    return AlphaRankParams(population_mode=mode)


def complete_and_rank(masked: MaskedMatrix, rank: int, params: AlphaRankParams | None = None,
                      truth=None, iters: int = 200, rng=None, p: float = 0.5,
                      init: str = "spectral") -> dict:
    """Complete ``masked`` in its transform space, map back to win rates and rank.

    Ranking uses infinite-alpha alpha-Rank on the two-player game with
    ``M^1 = P`` and ``M^2 = 1 - P``; square matrices default to the
    single-population model so that agents (not profiles) are ranked. When
    ``truth`` (a full win-rate matrix) is given, the Kendall distance between
    the two rankings is reported under ``"kendall"``.
    """
    params = params or default_params(masked.values.shape)
    fit = alternating_minimization(masked.transformed(), masked.mask, rank, iters, rng, init=init)
    completed = inverse_transform(fit.completed, masked.transform)
    dist = _rank_matrix(completed, params)
    out = {"completed": completed, "ranking": dist, "objective": fit.objective, "warnings": fit.warnings}
    if truth is not None:
        true_dist = _rank_matrix(np.asarray(truth, float), params)
        out["truth_ranking"] = true_dist
        out["kendall"] = kendall_partial(ranking_from_distribution(true_dist, params.tie_tol),
                                         ranking_from_distribution(dist, params.tie_tol), p)
    return out


def write_grid_csv(rows, path) -> None:
    """Rows of ``(transform, rank, obs_rate, seed, kendall_error)``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["transform", "rank", "obs_rate", "seed", "kendall_error"])
        for row in rows:
            w.writerow(row)
