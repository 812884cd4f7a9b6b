"""Normal-form meta-games: shapes, payoff tables, noisy outcome simulation and table I/O.

Strategy profiles are addressed either as tuples ``(s^1, ..., s^K)`` or as flat
indices. The two are related by the row-major (C order) mixed-radix bijection
``index = np.ravel_multi_index(profile, strategy_counts)``, so profile
``(0, ..., 0)`` is index 0 and the last player's strategy varies fastest.

Payoffs are stored densely as an array of shape ``(K, |S^1|, ..., |S^K|)``.
"""

from __future__ import annotations

import abc
import csv
import itertools
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from metaeval.errors import InputError

logger = logging.getLogger(__name__)

__all__ = [
    "GameShape",
    "PayoffTensor",
    "EmpiricalPayoffs",
    "OutcomeSimulator",
    "BernoulliSimulator",
    "make_rng",
    "profile_neighbors",
    "simulate_bernoulli",
    "generate_bernoulli_game",
    "validate_bernoulli_game",
    "is_symmetric",
    "load_table",
    "save_table",
]


def make_rng(seed, *stream):
    """Counter-based generator for ``(seed, *stream)``.

    Every stochastic routine in the package takes an explicit generator; trial
    ``t`` of an experiment seeded with ``seed`` uses ``make_rng(seed, t)``.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, stream)])))


@dataclass(frozen=True)
class GameShape:
    """Number of strategies available to each player."""

    strategy_counts: tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(c) for c in self.strategy_counts)
        if len(counts) == 0:
            raise InputError("a game needs at least one player")
        if any(c < 1 for c in counts):
            raise InputError(f"every player needs at least one strategy, got {counts}")
        object.__setattr__(self, "strategy_counts", counts)

    @property
    def num_players(self) -> int:
        return len(self.strategy_counts)

    @property
    def num_profiles(self) -> int:
        return math.prod(self.strategy_counts)

    @property
    def num_deviations(self) -> int:
        """Single-player deviations available from any profile, ``sum_k (|S^k| - 1)``."""
        return sum(c - 1 for c in self.strategy_counts)

    @property
    def eta(self) -> float:
        """Reciprocal of :attr:`num_deviations` (0 for a game with no deviations)."""
        n = self.num_deviations
        return 1.0 / n if n else 0.0

    def profiles(self) -> list[tuple[int, ...]]:
        """All profiles in flat-index order."""
        return list(itertools.product(*(range(c) for c in self.strategy_counts)))

    def validate(self, profile) -> tuple[int, ...]:
        s = tuple(int(x) for x in profile)
        if len(s) != self.num_players:
            raise InputError(f"profile {s} has {len(s)} entries, expected {self.num_players}")
        for k, (x, c) in enumerate(zip(s, self.strategy_counts)):
            if not 0 <= x < c:
                raise InputError(f"strategy {x} of player {k} outside [0, {c})")
        return s

    def index(self, profile) -> int:
        return int(np.ravel_multi_index(self.validate(profile), self.strategy_counts))

    def profile(self, index: int) -> tuple[int, ...]:
        if not 0 <= index < self.num_profiles:
            raise InputError(f"profile index {index} outside [0, {self.num_profiles})")
        return tuple(int(x) for x in np.unravel_index(index, self.strategy_counts))

    def is_square(self) -> bool:
        return len(set(self.strategy_counts)) == 1


def profile_neighbors(shape: GameShape, s) -> list[tuple[int, tuple[int, ...]]]:
    """Profiles reachable from ``s`` by a single player's deviation.

    Returns ``(k, sigma)`` pairs ordered by player, then by the deviating
    strategy. There are always ``shape.num_deviations`` of them.
    """
    s = shape.validate(s)
    out = []
    for k, count in enumerate(shape.strategy_counts):
        for alt in range(count):
            if alt != s[k]:
                out.append((k, s[:k] + (alt,) + s[k + 1:]))
    return out


class PayoffTensor:
    """Expected payoffs ``M^k(s)`` for every player ``k`` and profile ``s``.

    Parameters
    ----------
    payoffs : array_like, shape (K, |S^1|, ..., |S^K|)
        ``payoffs[k][s]`` is player ``k``'s expected payoff at profile ``s``.
    m_max : float, optional
        Bound with ``|M^k(s)| <= m_max``. Defaults to the largest absolute
        entry (or 1 for an all-zero table).
    labels : sequence of sequences of str, optional
        Strategy names per player; used only for I/O.

    The array is copied and frozen, so instances can be shared freely.
    """

    def __init__(self, payoffs, m_max: float | None = None, labels=None):
        arr = np.array(payoffs, dtype=float)
        if arr.ndim < 2 or arr.shape[0] != arr.ndim - 1:
            raise InputError(
                f"payoff array of shape {arr.shape} is not (K, |S^1|, ..., |S^K|)")
        if arr.size == 0:
            raise InputError("empty strategy list")
        if not np.all(np.isfinite(arr)):
            raise InputError("payoffs must be finite")
        largest = float(np.max(np.abs(arr)))
        if m_max is None:
            m_max = largest if largest > 0 else 1.0
        m_max = float(m_max)
        if not (math.isfinite(m_max) and m_max > 0):
            raise InputError(f"m_max must be positive and finite, got {m_max}")
        if largest > m_max:
            raise InputError(f"payoff {largest} exceeds m_max={m_max}")
        arr.setflags(write=False)
        self._payoffs = arr
        self._m_max = m_max
        self._shape = GameShape(arr.shape[1:])
        if labels is not None:
            labels = [list(map(str, names)) for names in labels]
            if [len(x) for x in labels] != list(self._shape.strategy_counts):
                raise InputError("strategy labels do not match the strategy counts")
        self._labels = labels

    @classmethod
    def from_bimatrix(cls, row, col, m_max=None, labels=None) -> "PayoffTensor":
        """Two-player table from the row player's and column player's matrices."""
        return cls(np.stack([np.asarray(row, float), np.asarray(col, float)]), m_max, labels)

    @property
    def payoffs(self) -> np.ndarray:
        return self._payoffs

    @property
    def m_max(self) -> float:
        return self._m_max

    @property
    def labels(self):
        return self._labels

    @property
    def shape(self) -> GameShape:
        return self._shape

    @property
    def num_players(self) -> int:
        return self._shape.num_players

    def flat(self) -> np.ndarray:
        """Payoffs as a ``(K, |S|)`` array in flat-index order."""
        return self._payoffs.reshape(self.num_players, -1)

    def payoff(self, k: int, profile) -> float:
        return float(self._payoffs[(k,) + self._shape.validate(profile)])

    def strategy_labels(self) -> list[list[str]]:
        if self._labels is not None:
            return [list(x) for x in self._labels]
        return [[str(i) for i in range(c)] for c in self._shape.strategy_counts]

    def __eq__(self, other):
        if not isinstance(other, PayoffTensor):
            return NotImplemented
        return (self._payoffs.shape == other._payoffs.shape
                and bool(np.array_equal(self._payoffs, other._payoffs))
                and self._m_max == other._m_max)

    def __repr__(self):
        return f"PayoffTensor(shape={self._shape.strategy_counts}, m_max={self._m_max})"


@dataclass
class EmpiricalPayoffs:
    """Running sums and counts of observed outcomes per profile.

    ``sums`` has shape ``(K, |S|)`` and ``counts`` shape ``(|S|,)``, both in
    flat-index order. Means of unsampled profiles are NaN.
    """

    shape: GameShape
    sums: np.ndarray
    counts: np.ndarray
    outcome_range: tuple[float, float] = (0.0, 1.0)

    @classmethod
    def empty(cls, shape: GameShape, outcome_range=(0.0, 1.0)) -> "EmpiricalPayoffs":
        return cls(shape, np.zeros((shape.num_players, shape.num_profiles)),
                   np.zeros(shape.num_profiles, dtype=np.int64), tuple(outcome_range))

    def record(self, index: int, outcome) -> None:
        self.sums[:, index] += outcome
        self.counts[index] += 1

    @property
    def flat_means(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            means = self.sums / self.counts
        means[:, self.counts == 0] = np.nan
        return means

    @property
    def means(self) -> np.ndarray:
        """Sample means with shape ``(K, |S^1|, ..., |S^K|)``; NaN where unsampled."""
        return self.flat_means.reshape((self.shape.num_players,) + self.shape.strategy_counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def to_table(self, fill: float | None = None) -> PayoffTensor:
        """Empirical table; unsampled entries take ``fill`` (default: middle of the outcome range)."""
        a, b = self.outcome_range
        if fill is None:
            fill = 0.5 * (a + b)
        means = np.where(np.isnan(self.means), fill, self.means)
        return PayoffTensor(means, m_max=max(abs(a), abs(b), float(np.max(np.abs(means)))) or 1.0)


class OutcomeSimulator(abc.ABC):
    """Source of noisy match outcomes.

    ``sample(profile, rng)`` returns one payoff per player. Outcomes lie in
    ``outcome_range`` and depend only on the profile and the generator state.
    """

    shape: GameShape
    outcome_range: tuple[float, float] = (0.0, 1.0)
    symmetric: bool = False

    @abc.abstractmethod
    def sample(self, profile, rng) -> list[float]:
        ...


class BernoulliSimulator(OutcomeSimulator):
    """Bernoulli outcomes whose means are the entries of ``game``.

    Tables with entries in ``[0, 1]`` are simulated directly. Other tables are
    mapped affinely from ``[-m_max, m_max]`` onto ``[0, 1]``; outcomes are then
    reported back in payoff units (``-m_max`` or ``m_max``), so sample means
    remain unbiased for ``M``. For two-player tables with ``M^1 + M^2 = 1`` a
    single winner is drawn per match; otherwise each player's outcome is an
    independent draw.
    """

    def __init__(self, game: PayoffTensor, symmetric: bool | None = None):
        self.game = game
        self.shape = game.shape
        table = game.flat()
        if np.all((table >= 0) & (table <= 1)):
            lo, hi = 0.0, 1.0
        else:
            lo, hi = -game.m_max, game.m_max
        self.outcome_range = (lo, hi)
        probs = (table - lo) / (hi - lo)
        self._probs = probs.T.tolist()
        self._k = game.num_players
        self._win_loss = (self._k == 2 and lo == 0.0
                          and bool(np.all(np.abs(table.sum(axis=0) - 1.0) <= 1e-12)))
        self.symmetric = is_symmetric(game) if symmetric is None else bool(symmetric)

    def sample(self, profile, rng) -> list[float]:
        index = profile if isinstance(profile, (int, np.integer)) else self.shape.index(profile)
        p = self._probs[index]
        lo, hi = self.outcome_range
        if self._win_loss:
            return [hi, lo] if rng.random() < p[0] else [lo, hi]
        u = rng.random(self._k)
        return [hi if u[k] < p[k] else lo for k in range(self._k)]


def simulate_bernoulli(game: PayoffTensor, profile, rng) -> np.ndarray:
    """One noisy outcome of ``profile`` for a table with entries in ``[0, 1]``.

    Each player's outcome is 0 or 1 with mean ``M^k(s)``. When the two
    players' payoffs sum to one the outcome is a single win/loss draw.
    """
    s = game.shape.validate(profile)
    p = game.payoffs[(slice(None),) + s]
    if np.any((p < 0) | (p > 1)):
        raise InputError(f"payoffs {p} at profile {s} are not probabilities")
    if game.num_players == 2 and abs(p[0] + p[1] - 1.0) <= 1e-12:
        return np.array([1.0, 0.0]) if rng.random() < p[0] else np.array([0.0, 1.0])
    return (rng.random(game.num_players) < p).astype(float)


def _draw_off_gap(rng, gap):
    # uniform on [0, 0.5 - gap] U [0.5 + gap, 1]; same law as rejecting U[0,1] draws
    u = rng.random() * (1.0 - 2.0 * gap)
    return u if u <= 0.5 - gap else u + 2.0 * gap


def generate_bernoulli_game(n: int, gap: float, rng, *, min_margin: float = 0.0,
                            max_restarts: int = 10_000) -> PayoffTensor:
    """Random symmetric two-player win-loss game.

    ``M^1[i, j]`` is the probability that strategy ``i`` beats ``j``. Diagonal
    entries are 0.5, ``M^1[j, i] = 1 - M^1[i, j]`` and ``M^2 = 1 - M^1``.
    Off-diagonal entries are uniform on ``[0, 1]`` conditioned on
    ``|M - 0.5| >= gap``.

    With ``min_margin > 0`` the table is additionally conditioned on every
    single-deviation comparison differing by at least ``min_margin`` (the
    payoff gap Delta of the instance). Entries are drawn one at a time and the
    whole table is redrawn on a dead end; ``InputError`` is raised if no valid
    table is found within ``max_restarts`` attempts.
    """
    n = int(n)
    if n < 2:
        raise InputError("need at least two strategies")
    if not 0.0 <= gap < 0.5:
        raise InputError(f"gap must lie in [0, 0.5), got {gap}")
    if min_margin < 0:
        raise InputError("min_margin must be nonnegative")
    if min_margin > 0 and min_margin > 2 * (0.5 - gap) + 2 * gap and n > 2:
        raise InputError(f"min_margin={min_margin} cannot be met")
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    for _ in range(max_restarts):
        m = np.full((n, n), np.nan)
        np.fill_diagonal(m, 0.5)
        ok = True
        for i, j in pairs:
            for _attempt in range(64):
                x = _draw_off_gap(rng, gap)
                if min_margin <= 0:
                    break
                # x lands in column j, 1 - x in column i; player 2's comparisons
                # mirror these columns because M^2 is the transpose of M^1
                col_j = m[:, j][~np.isnan(m[:, j])]
                col_i = m[:, i][~np.isnan(m[:, i])]
                if (np.all(np.abs(col_j - x) >= min_margin)
                        and np.all(np.abs(col_i - (1.0 - x)) >= min_margin)):
                    break
            else:
                ok = False
                break
            m[i, j] = x
            m[j, i] = 1.0 - x
        if ok:
            return PayoffTensor(np.stack([m, 1.0 - m]), m_max=1.0)
    raise InputError(f"no {n}x{n} game with gap={gap}, min_margin={min_margin} "
                     f"found in {max_restarts} attempts")


def validate_bernoulli_game(game: PayoffTensor, gap: float, min_margin: float = 0.0) -> list[str]:
    """Exhaustively check a generated game; returns a list of violations (empty if valid)."""
    problems = []
    if game.num_players != 2 or not game.shape.is_square():
        return ["not a square two-player game"]
    m1, m2 = game.payoffs
    n = m1.shape[0]
    if not np.allclose(m1 + m2, 1.0, atol=1e-12, rtol=0):
        problems.append("not constant-sum 1")
    for i in range(n):
        if m1[i, i] != 0.5:
            problems.append(f"diagonal ({i},{i}) = {m1[i, i]}")
        for j in range(n):
            if i != j and abs(m1[i, j] - 0.5) < gap:
                problems.append(f"entry ({i},{j}) = {m1[i, j]} within gap of 0.5")
    for k, table in enumerate((m1, m2)):
        for s in itertools.product(range(n), repeat=2):
            for dev, sigma in profile_neighbors(game.shape, s):
                if dev != k or sigma <= s:
                    continue
                diff = abs(table[sigma] - table[s])
                if diff == 0 or diff < min_margin:
                    problems.append(f"player {k} deviation {s}->{sigma} differs by {diff}")
    return problems


def is_symmetric(game: PayoffTensor, tol: float = 1e-12) -> bool:
    """Whether permuting the players permutes the payoffs accordingly.

    Checks ``M^{p(k)}(s') = M^k(s)`` with ``s'^{p(k)} = s^k`` for every player
    permutation ``p``, profile ``s`` and player ``k``. Games whose players have
    different strategy counts are reported as asymmetric.
    """
    shape = game.shape
    if not shape.is_square():
        logger.warning("strategy counts %s differ across players; game treated as asymmetric",
                       shape.strategy_counts)
        return False
    pay = game.payoffs
    k_players = shape.num_players
    for perm in itertools.permutations(range(k_players)):
        for k in range(k_players):
            # permuted[s] = M^{perm(k)}(s') where s'^{perm(i)} = s^i
            permuted = np.transpose(pay[perm[k]], perm)
            if np.max(np.abs(permuted - pay[k])) > tol:
                return False
    return True


# --- table I/O -------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _nested(a: np.ndarray) -> str:
    if a.ndim == 1:
        return "[" + ", ".join(_fmt(x) for x in a) + "]"
    return "[" + ", ".join(_nested(x) for x in a) + "]"


def _infer_format(path, fmt):
    if fmt is not None:
        return fmt.lower()
    if isinstance(path, (list, tuple)):
        return "csv"
    suffix = Path(path).suffix.lower()
    return {".json": "json", ".csv": "csv"}.get(suffix, "json")


def _csv_paths(path) -> list[Path]:
    if isinstance(path, (list, tuple)):
        if len(path) != 2:
            raise InputError("CSV tables need exactly one file per player (two players)")
        return [Path(p) for p in path]
    base = Path(path)
    stem = base.with_suffix("") if base.suffix.lower() == ".csv" else base
    return [stem.with_name(f"{stem.name}.p{k + 1}.csv") for k in range(2)]


def save_table(game: PayoffTensor, path, format: str | None = None) -> None:
    """Write ``game`` as JSON, or as one CSV per player for two-player games.

    In the CSV layout each file lists the player's own strategies as rows and
    the opponent's strategies as columns, so player 2's file holds the
    transpose of ``M^2``. Floats are written with 17 significant digits.
    """
    fmt = _infer_format(path, format)
    labels = game.strategy_labels()
    if fmt == "json":
        parts = [
            f'"players": {game.num_players}',
            f'"strategy_counts": {json.dumps(list(game.shape.strategy_counts))}',
            f'"payoffs": {_nested(game.payoffs)}',
            f'"m_max": {_fmt(game.m_max)}',
        ]
        if game.labels is not None:
            parts.append(f'"strategy_names": {json.dumps(labels)}')
        Path(path).write_text("{" + ", ".join(parts) + "}\n")
    elif fmt == "csv":
        if game.num_players != 2:
            raise InputError("CSV format holds two-player tables only")
        for k, p in enumerate(_csv_paths(path)):
            own = game.payoffs[k] if k == 0 else game.payoffs[k].T
            with open(p, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["strategy"] + labels[1 - k])
                for name, row in zip(labels[k], own):
                    w.writerow([name] + [_fmt(x) for x in row])
    else:
        raise InputError(f"unknown table format {fmt!r}")


def load_table(path, format: str | None = None) -> PayoffTensor:
    """Read a table written by :func:`save_table` (or by hand in the same layout)."""
    fmt = _infer_format(path, format)
    if fmt == "json":
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: malformed JSON ({exc})") from exc
        if not isinstance(doc, dict):
            raise InputError(f"{path}: expected a JSON object")
        missing = {"players", "strategy_counts", "payoffs"} - set(doc)
        if missing:
            raise InputError(f"{path}: missing keys {sorted(missing)}")
        counts = doc["strategy_counts"]
        if not isinstance(counts, list) or len(counts) == 0 or any(
                not isinstance(c, int) or c < 1 for c in counts):
            raise InputError(f"{path}: empty or invalid strategy list {counts!r}")
        if doc["players"] != len(counts) or len(doc["payoffs"]) != len(counts):
            raise InputError(f"{path}: player count does not match strategy_counts/payoffs")
        try:
            arr = np.array(doc["payoffs"], dtype=float)
        except (ValueError, TypeError) as exc:
            raise InputError(f"{path}: ragged payoff tensors ({exc})") from exc
        if arr.shape != (len(counts), *counts):
            raise InputError(f"{path}: payoff tensors have shape {arr.shape[1:]}, "
                             f"expected {tuple(counts)} for every player")
        return PayoffTensor(arr, doc.get("m_max"), doc.get("strategy_names"))
    if fmt == "csv":
        tables, names = [], []
        for p in _csv_paths(path):
            with open(p, newline="") as fh:
                rows = [r for r in csv.reader(fh) if r]
            if len(rows) < 2 or len(rows[0]) < 2:
                raise InputError(f"{p}: empty strategy list")
            header = rows[0][1:]
            try:
                body = [[float(x) for x in r[1:]] for r in rows[1:]]
            except ValueError as exc:
                raise InputError(f"{p}: non-numeric entry ({exc})") from exc
            if any(len(r) != len(header) for r in body):
                raise InputError(f"{p}: rows do not match the header width")
            tables.append(np.array(body))
            names.append(([r[0] for r in rows[1:]], header))
        m1, m2t = tables
        if m2t.shape != m1.T.shape:
            raise InputError("player tables have incompatible shapes")
        if names[0][0] != names[1][1] or names[0][1] != names[1][0]:
            raise InputError("strategy names disagree between the two player files")
        return PayoffTensor(np.stack([m1, m2t.T]), labels=[names[0][0], names[0][1]])
    raise InputError(f"unknown table format {fmt!r}")


def as_payoff_tensor(game) -> PayoffTensor:
    if isinstance(game, PayoffTensor):
        return game
    return PayoffTensor(game)


def stack_profiles(shape: GameShape, indices: Sequence[int]) -> list[tuple[int, ...]]:
    return [shape.profile(i) for i in indices]
