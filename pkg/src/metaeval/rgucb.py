"""ResponseGraphUCB: adaptive sampling until every single-deviation comparison is resolved.

A comparison problem asks which of two profiles, differing only in player
``k``'s strategy, gives player ``k`` the larger expected payoff. The sampler
repeatedly picks a profile involved in an open problem, simulates one match,
and closes every problem whose two confidence intervals have separated.

Sampling schemes
    ``U``   uniform over profiles in open problems (redrawn every step)
    ``UE``  commit to a uniformly drawn open problem and alternate between its
            two profiles (the less-sampled one first, lower index on ties)
            until it closes
    ``VW``  profile drawn with probability proportional to its squared valence,
            the number of open problems it appears in
    ``CW``  the least-sampled profile among those in open problems (lowest
            index on ties)

Stopping criteria
    ``UCB``, ``CP-UCB``          Hoeffding / Clopper-Pearson intervals must be disjoint
    ``R-UCB``, ``R-CP-UCB``      the intervals may overlap by less than ``epsilon_relax``

Every interval check for a problem at time index ``t`` (the summed counts of
its two profiles) runs at level ``allocate_confidence(delta, shape, t)``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import betaincinv

from metaeval.alpharank import CERTAIN, MULTI, TIE, UNCERTAIN, ResponseGraph
from metaeval.confidence import (CLOPPER_PEARSON, HOEFFDING, ConfidenceInterval, allocation_constant,
                                 is_resolved)
from metaeval.errors import ContractViolation, InputError
from metaeval.game import EmpiricalPayoffs, GameShape, OutcomeSimulator, PayoffTensor, profile_neighbors

SCHEMES = ("U", "UE", "VW", "CW")
CRITERIA = {
    "UCB": (HOEFFDING, False),
    "CP-UCB": (CLOPPER_PEARSON, False),
    "R-UCB": (HOEFFDING, True),
    "R-CP-UCB": (CLOPPER_PEARSON, True),
}

__all__ = [
    "SCHEMES",
    "CRITERIA",
    "ComparisonProblem",
    "SamplerState",
    "RGUCBResult",
    "build_comparison_list",
    "select_next",
    "run_response_graph_ucb",
    "run_symmetric_rgucb",
    "replay_resolutions",
]


@dataclass
class ComparisonProblem:
    """Two profiles differing only in ``player``'s strategy (``index_a < index_b``)."""

    id: int
    player: int
    profile_a: tuple
    profile_b: tuple
    index_a: int
    index_b: int
    resolved: bool = False
    direction: int = 0
    resolved_step: int | None = None

    @property
    def status(self) -> str:
        return "resolved" if self.resolved else "unresolved"


def build_comparison_list(shape: GameShape) -> list[ComparisonProblem]:
    """One problem per unordered single-deviation pair, ordered by lower profile index."""
    out = []
    for a, s in enumerate(shape.profiles()):
        for k, sigma in profile_neighbors(shape, s):
            b = shape.index(sigma)
            if b > a:
                out.append(ComparisonProblem(len(out), k, s, sigma, a, b))
    return out


def _parse_criterion(criterion: str, epsilon_relax, outcome_range):
    try:
        method, relaxed = CRITERIA[criterion.upper()]
    except KeyError:
        raise InputError(f"unknown stopping criterion {criterion!r}; expected one of {sorted(CRITERIA)}")
    if not relaxed:
        return method, None
    span = outcome_range[1] - outcome_range[0]
    return method, 0.05 * span if epsilon_relax is None else float(epsilon_relax)


class SamplerState:
    """Running statistics and open problems of one ResponseGraphUCB run.

    ``known`` maps profile indices to payoffs known exactly (all players);
    such profiles are never sampled and carry zero-width intervals.
    """

    def __init__(self, shape: GameShape, delta: float, criterion: str = "UCB",
                 outcome_range=(0.0, 1.0), epsilon_relax: float | None = None,
                 known: dict | None = None):
        if not 0 < delta < 1:
            raise InputError(f"delta must lie in (0, 1), got {delta}")
        self.shape = shape
        self.delta = float(delta)
        self.criterion = criterion.upper()
        self.outcome_range = (float(outcome_range[0]), float(outcome_range[1]))
        self.method, self.epsilon_relax = _parse_criterion(criterion, epsilon_relax, self.outcome_range)
        self.lo, self.hi = self.outcome_range
        self.span = self.hi - self.lo
        k_players, n = shape.num_players, shape.num_profiles
        self.sums = [[0.0] * n for _ in range(k_players)]
        self.counts = [0] * n
        self.known = dict(known or {})
        self.problems = build_comparison_list(shape)
        self.alloc = allocation_constant(self.delta, shape)
        self._log_alloc_term = math.log(2.0) - math.log(self.alloc) if self.problems else 0.0
        self.by_profile: list[list[int]] = [[] for _ in range(n)]
        for pr in self.problems:
            self.by_profile[pr.index_a].append(pr.id)
            self.by_profile[pr.index_b].append(pr.id)
        self.valence = [len(x) for x in self.by_profile]
        self.open_ids = [pr.id for pr in self.problems]
        self.budget_used = 0
        self.step = 0
        self.committed: int | None = None

    # -- statistics ----------------------------------------------------------
    @property
    def unresolved(self) -> list[ComparisonProblem]:
        return [self.problems[i] for i in self.open_ids]

    @property
    def empirical(self) -> EmpiricalPayoffs:
        """Observed statistics only; exactly known profiles keep a zero count."""
        return EmpiricalPayoffs(self.shape, np.array(self.sums, dtype=float),
                                np.array(self.counts, dtype=np.int64), self.outcome_range)

    def estimated_table(self):
        """Payoff table of sample means, with known profiles filled in exactly and
        unsampled ones at the middle of the outcome range."""
        means = self.empirical.flat_means
        for p, value in self.known.items():
            means[:, p] = value
        means = np.where(np.isnan(means), 0.5 * (self.lo + self.hi), means)
        dims = (self.shape.num_players,) + self.shape.strategy_counts
        return PayoffTensor(means.reshape(dims), m_max=max(abs(self.lo), abs(self.hi)) or 1.0)

    def sampleable(self, p: int) -> bool:
        return self.valence[p] > 0 and p not in self.known

    def active_profiles(self) -> list[int]:
        return [p for p in range(len(self.counts)) if self.valence[p] > 0 and p not in self.known]

    def time_index(self, problem: ComparisonProblem) -> int:
        return self.counts[problem.index_a] + self.counts[problem.index_b]

    def interval(self, p: int, k: int, t: int) -> ConfidenceInterval:
        """Confidence interval for player ``k`` at profile ``p`` checked at time index ``t``."""
        f = self.alloc / float(t) ** 3 if t >= 1 else 1.0
        if p in self.known:
            v = float(self.known[p][k])
            return ConfidenceInterval(v, v, v, self.method, f)
        n = self.counts[p]
        if n == 0:
            return ConfidenceInterval(self.lo, self.hi, math.nan, self.method, f)
        lo, hi, mean = self._bounds(p, k, n, t)
        return ConfidenceInterval(lo, hi, mean, self.method, f)

    def _bounds(self, p, k, n, t):
        mean = self.sums[k][p] / n
        if self.method == HOEFFDING:
            w = self.span * math.sqrt((self._log_alloc_term + 3.0 * math.log(t)) / (2.0 * n))
            return mean - w, mean + w, mean
        f = self.alloc / float(t) ** 3
        x = (mean - self.lo) / self.span * n
        if x <= 0:
            x = 0.0
        elif x >= n:
            x = float(n)
        lo = 0.0 if x <= 0 else float(betaincinv(x, n - x + 1, 0.5 * f))
        hi = 1.0 if x >= n else float(betaincinv(x + 1, n - x, 1 - 0.5 * f))
        return self.lo + self.span * lo, self.lo + self.span * hi, mean

    def _check_problem(self, pid: int):
        pr = self.problems[pid]
        a, b = pr.index_a, pr.index_b
        if (self.counts[a] == 0 and a not in self.known) or (self.counts[b] == 0 and b not in self.known):
            return 0
        t = self.counts[a] + self.counts[b]
        k = pr.player
        if a in self.known or b in self.known:
            ia, ib = self.interval(a, k, t), self.interval(b, k, t)
            la, ua, ma = ia.lower, ia.upper, ia.mean
            lb, ub, mb = ib.lower, ib.upper, ib.mean
        else:
            la, ua, ma = self._bounds(a, k, self.counts[a], t)
            lb, ub, mb = self._bounds(b, k, self.counts[b], t)
        ok, direction = is_resolved((la, ua, ma), (lb, ub, mb), self.epsilon_relax)
        return direction if ok else 0

    def record(self, p: int, outcome) -> None:
        """Add one observed payoff vector to profile ``p``."""
        sums = self.sums
        for k, o in enumerate(outcome):
            sums[k][p] += o
        self.counts[p] += 1

    def resolve_around(self, touched) -> list[int]:
        """Check every open problem involving a profile in ``touched``; close resolved ones."""
        closed = []
        seen = set()
        for p in touched:
            for pid in self.by_profile[p]:
                if pid in seen:
                    continue
                seen.add(pid)
                pr = self.problems[pid]
                if pr.resolved:
                    continue
                d = self._check_problem(pid)
                if d:
                    pr.resolved, pr.direction, pr.resolved_step = True, d, self.step
                    self.valence[pr.index_a] -= 1
                    self.valence[pr.index_b] -= 1
                    self.open_ids.remove(pid)
                    closed.append(pid)
        return closed

    def resolve_all(self) -> list[int]:
        return self.resolve_around(range(len(self.counts)))

    def _draw(self, rng, n: int) -> int:
        return min(int(rng.random() * n), n - 1)

    # -- selection ------------------------------------------------------------
    def select(self, scheme: str, rng) -> int:
        if not self.open_ids:
            raise ContractViolation("no unresolved comparison left to sample for")
        if scheme == "UE":
            if self.committed is None or self.problems[self.committed].resolved:
                self.committed = self.open_ids[self._draw(rng, len(self.open_ids))]
            pr = self.problems[self.committed]
            a, b = pr.index_a, pr.index_b
            if a in self.known:
                return b
            if b in self.known:
                return a
            return b if self.counts[b] < self.counts[a] else a
        active = self.active_profiles()
        if not active:
            raise ContractViolation("open comparisons involve only exactly known profiles")
        if scheme == "U":
            return active[self._draw(rng, len(active))]
        if scheme == "CW":
            counts = self.counts
            return min(active, key=lambda p: (counts[p], p))
        if scheme == "VW":
            weights = [self.valence[p] ** 2 for p in active]
            u = rng.random() * sum(weights)
            acc = 0.0
            for p, w in zip(active, weights):
                acc += w
                if u < acc:
                    return p
            return active[-1]
        raise InputError(f"unknown sampling scheme {scheme!r}; expected one of {SCHEMES}")


def select_next(scheme: str, state: SamplerState, rng) -> tuple:
    """Profile (as a tuple) that ``scheme`` samples next from ``state``."""
    return state.shape.profile(state.select(scheme.upper(), rng))


@dataclass
class RGUCBResult:
    """Outcome of a ResponseGraphUCB run."""

    state: SamplerState
    graph: ResponseGraph
    total_samples: int
    truncated: bool
    scheme: str
    symmetric: bool = False
    history: list = field(default_factory=list)
    samples_per_profile: list = field(default_factory=list)

    @property
    def empirical(self) -> EmpiricalPayoffs:
        return self.state.empirical

    @property
    def counts(self) -> np.ndarray:
        return np.array(self.state.counts)

    def estimated_table(self) -> PayoffTensor:
        return self.state.estimated_table()

    @property
    def problems(self) -> list[ComparisonProblem]:
        return self.state.problems

    def history_records(self) -> list[dict]:
        shape = self.state.shape
        return [{"step": step, "profile": list(shape.profile(p)), "outcome": list(o), "resolved": list(r)}
                for step, p, o, r in self.history]

    def write_history(self, path) -> None:
        with open(path, "w") as fh:
            for rec in self.history_records():
                fh.write(json.dumps(rec) + "\n")

    def summary(self) -> dict:
        st = self.state
        return {
            "total_samples": self.total_samples,
            "truncated": self.truncated,
            "scheme": self.scheme,
            "criterion": st.criterion,
            "delta": st.delta,
            "symmetric": self.symmetric,
            "counts": list(st.counts),
            "samples_per_profile": list(self.samples_per_profile),
            "edges": [dict(e, resolved_step=pr.resolved_step, resolved=pr.resolved)
                      for e, pr in zip(_edges_by_problem(self.graph, st.problems), st.problems)],
        }

    def payoff_bounds(self):
        """Element-wise bounds from the final statistics.

        Each profile's interval is computed at time index ``t = count`` with
        the same level schedule as the run, clipped to the outcome range.
        Unsampled profiles get the whole outcome range.
        """
        from metaeval.uncertainty import PayoffBounds

        st = self.state
        k_players, n = st.shape.num_players, st.shape.num_profiles
        lower = np.empty((k_players, n))
        upper = np.empty((k_players, n))
        for p in range(n):
            for k in range(k_players):
                ci = st.interval(p, k, max(st.counts[p], 1))
                lower[k, p] = max(ci.lower, st.lo)
                upper[k, p] = min(ci.upper, st.hi)
        dims = (k_players,) + st.shape.strategy_counts
        return PayoffBounds(lower.reshape(dims), upper.reshape(dims))


def _edges_by_problem(graph, problems):
    out = []
    for pr in problems:
        key = (pr.index_a, pr.index_b, pr.player)
        o = graph.edges[key]
        src, dst = (pr.profile_a, pr.profile_b) if o >= 0 else (pr.profile_b, pr.profile_a)
        out.append({"id": pr.id, "from": list(src), "to": list(dst), "player": pr.player,
                    "tie": o == 0, "flag": graph.flags[key]})
    return out


def _final_graph(state: SamplerState) -> ResponseGraph:
    edges, flags = {}, {}
    for pr in state.problems:
        key = (pr.index_a, pr.index_b, pr.player)
        if pr.resolved:
            edges[key] = pr.direction
            flags[key] = CERTAIN
            continue
        a = state.interval(pr.index_a, pr.player, 1).mean
        b = state.interval(pr.index_b, pr.player, 1).mean
        if math.isnan(a) or math.isnan(b) or a == b:
            edges[key] = 0
            flags[key] = TIE if (pr.index_a in state.known and pr.index_b in state.known) else UNCERTAIN
        else:
            edges[key] = 1 if b > a else -1
            flags[key] = UNCERTAIN
    return ResponseGraph(state.shape.profiles(), edges, flags, MULTI)


def _check_inputs(sim, shape, budget_cap, scheme):
    if budget_cap is None or budget_cap < 1:
        raise InputError("budget_cap must be at least 1")
    if scheme.upper() not in SCHEMES:
        raise InputError(f"unknown sampling scheme {scheme!r}; expected one of {SCHEMES}")
    if tuple(sim.shape.strategy_counts) != tuple(shape.strategy_counts):
        raise InputError(f"simulator shape {sim.shape.strategy_counts} differs from {shape.strategy_counts}")


def run_response_graph_ucb(sim: OutcomeSimulator, shape: GameShape, delta: float, scheme: str = "UE",
                           criterion: str = "UCB", budget_cap: int = 100_000, rng=None,
                           epsilon_relax: float | None = None, record_history: bool = True) -> RGUCBResult:
    """Sample profiles until every comparison is resolved or ``budget_cap`` matches are used.

    Resolved edges follow the direction found at resolution. Edges still open
    when the budget runs out are oriented by the current means and flagged
    ``"uncertain"``; the result is then marked ``truncated``.
    """
    _check_inputs(sim, shape, budget_cap, scheme)
    if rng is None:
        raise InputError("an explicit random generator is required")
    scheme = scheme.upper()
    state = SamplerState(shape, delta, criterion, sim.outcome_range, epsilon_relax)
    history = []
    sample = sim.sample
    while state.open_ids and state.budget_used < budget_cap:
        p = state.select(scheme, rng)
        outcome = sample(p, rng)
        state.step += 1
        state.record(p, outcome)
        state.budget_used += 1
        closed = state.resolve_around((p,))
        if record_history:
            history.append((state.step, p, tuple(outcome), tuple(closed)))
    truncated = bool(state.open_ids)
    return RGUCBResult(state, _final_graph(state), state.budget_used, truncated, scheme, False,
                       history, list(state.counts))


def _orbit_table(shape: GameShape):
    """For each profile: its canonical (sorted) representative and, for canonical
    profiles, the list of ``(profile, source player for each player)`` updates."""
    k_players = shape.num_players
    canon = []
    updates = {}
    for s in shape.profiles():
        c = tuple(sorted(s))
        canon.append(shape.index(c))
    for s in shape.profiles():
        if tuple(sorted(s)) != s:
            continue
        seen = {}
        for perm in itertools.permutations(range(k_players)):
            image = [0] * k_players
            source = [0] * k_players
            for k in range(k_players):
                # player perm[k] at the image profile plays s[k] and receives o[k]
                image[perm[k]] = s[k]
                source[perm[k]] = k
            idx = shape.index(image)
            if idx not in seen:
                seen[idx] = tuple(source)
        updates[shape.index(s)] = list(seen.items())
    return canon, updates


def run_symmetric_rgucb(sim: OutcomeSimulator, shape: GameShape, delta: float, scheme: str = "UE",
                        criterion: str = "UCB", budget_cap: int = 100_000, rng=None,
                        epsilon_relax: float | None = None, record_history: bool = True,
                        constant_sum: float | None = None) -> RGUCBResult:
    """ResponseGraphUCB that exploits player symmetry.

    Only canonical profiles (strategies in nondecreasing order) are simulated.
    One match of a canonical profile yields one observation for every profile
    in its permutation orbit, with payoffs permuted accordingly. Profiles in
    which all players use the same strategy are known exactly, at
    ``constant_sum / K`` (default: the middle of the outcome range for two
    players), and are never sampled. ``total_samples`` counts simulated
    matches, while ``state.counts`` counts observations per profile.
    """
    _check_inputs(sim, shape, budget_cap, scheme)
    if rng is None:
        raise InputError("an explicit random generator is required")
    if not shape.is_square() or shape.num_players < 2:
        raise InputError("the symmetric sampler needs at least two players with equal strategy counts")
    if not getattr(sim, "symmetric", False):
        raise InputError("simulator is not declared symmetric")
    scheme = scheme.upper()
    lo, hi = sim.outcome_range
    k_players = shape.num_players
    if constant_sum is None:
        constant_sum = lo + hi
    diag_value = constant_sum / k_players
    known = {}
    for i in range(shape.strategy_counts[0]):
        known[shape.index((i,) * k_players)] = (diag_value,) * k_players
    state = SamplerState(shape, delta, criterion, sim.outcome_range, epsilon_relax, known)
    canon, updates = _orbit_table(shape)
    simulated = [0] * shape.num_profiles
    history = []
    sample = sim.sample
    if state.problems:
        state.resolve_all()
    while state.open_ids and state.budget_used < budget_cap:
        chosen = state.select(scheme, rng)
        c = canon[chosen]
        outcome = sample(c, rng)
        state.step += 1
        touched = []
        for idx, source in updates[c]:
            state.record(idx, [outcome[j] for j in source])
            touched.append(idx)
        simulated[c] += 1
        state.budget_used += 1
        closed = state.resolve_around(touched)
        if record_history:
            history.append((state.step, c, tuple(outcome), tuple(closed)))
    truncated = bool(state.open_ids)
    return RGUCBResult(state, _final_graph(state), state.budget_used, truncated, scheme, True,
                       history, simulated)


def replay_resolutions(result: RGUCBResult) -> list[str]:
    """Re-run the statistics from the history and re-check every resolution event.

    Returns a list of violations (empty when every recorded resolution is
    justified by the criterion at that step and no problem was closed twice).
    """
    old = result.state
    state = SamplerState(old.shape, old.delta, old.criterion, old.outcome_range,
                         old.epsilon_relax, old.known)
    if result.symmetric:
        _, updates = _orbit_table(old.shape)
    problems = []
    closed_before = set()
    for step, p, outcome, closed in result.history:
        if result.symmetric:
            for idx, source in updates[p]:
                state.record(idx, [outcome[j] for j in source])
        else:
            state.record(p, outcome)
        for pid in closed:
            if pid in closed_before:
                problems.append(f"step {step}: problem {pid} closed twice")
            closed_before.add(pid)
            d = state._check_problem(pid)
            if d == 0:
                problems.append(f"step {step}: problem {pid} closed without separated intervals")
            elif d != old.problems[pid].direction:
                problems.append(f"step {step}: problem {pid} direction mismatch")
    return problems


def write_summary(result: RGUCBResult, path) -> None:
    Path(path).write_text(json.dumps(result.summary(), indent=1) + "\n")
