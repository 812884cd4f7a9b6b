"""Propagating payoff uncertainty into intervals on infinite-alpha ranking weights.

Given element-wise bounds ``L <= M <= U``, each single-deviation comparison is
either settled (the payoff intervals do not overlap) or open. The ranking
weight of a state ``s`` is extremised over all orientations of the open
edges. The upper end is ``1 / min lambda(s)`` and the lower end is
``1 / max lambda(s)``, where ``lambda(s)`` is the mean return time to ``s``.
Both extremes are found by solving a stochastic shortest path problem in
which every state independently chooses which of its open edges point
outward. The lower end is 0 whenever some orientation makes ``s`` transient,
which is decided separately by a forced-ancestor procedure.

Convention: a state's weight is measured within its own sink component
(the component receives full mass), so no perturbation sweep is involved.
"""

from __future__ import annotations

import csv
import itertools
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from metaeval.alpharank import MULTI, SINGLE, AlphaRankParams, ResponseGraph, _deviation_arrays
from metaeval.errors import ContractViolation, InputError
from metaeval.game import PayoffTensor

MINIMIZE = "minimize"
MAXIMIZE = "maximize"

__all__ = [
    "PayoffBounds",
    "UncertainResponseGraph",
    "MembershipResult",
    "RankingInterval",
    "classify_edges",
    "mcc_membership_possible",
    "ssp_extremal_return_time",
    "ranking_weight_interval",
    "all_ranking_intervals",
    "write_intervals_csv",
]


class PayoffBounds:
    """Element-wise lower and upper payoff tables of shape ``(K, |S^1|, ..., |S^K|)``."""

    def __init__(self, lower, upper):
        lower = lower.payoffs if isinstance(lower, PayoffTensor) else np.array(lower, float)
        upper = upper.payoffs if isinstance(upper, PayoffTensor) else np.array(upper, float)
        if lower.shape != upper.shape:
            raise InputError(f"bound shapes differ: {lower.shape} vs {upper.shape}")
        if lower.ndim < 2 or lower.shape[0] != lower.ndim - 1:
            raise InputError(f"bounds of shape {lower.shape} are not (K, |S^1|, ..., |S^K|)")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise InputError("bounds must be finite")
        if np.any(lower > upper):
            raise InputError("lower bound exceeds upper bound somewhere")
        self.lower = lower
        self.upper = upper

    @classmethod
    def exact(cls, game: PayoffTensor) -> "PayoffBounds":
        return cls(game.payoffs, game.payoffs)

    @classmethod
    def around(cls, game: PayoffTensor, halfwidth: float, clip=None) -> "PayoffBounds":
        """``M -/+ halfwidth``, optionally clipped to ``clip = (a, b)``."""
        lo, hi = game.payoffs - halfwidth, game.payoffs + halfwidth
        if clip is not None:
            lo, hi = np.clip(lo, *clip), np.clip(hi, *clip)
        return cls(lo, hi)

    @property
    def strategy_counts(self) -> tuple:
        return self.lower.shape[1:]

    def contains(self, game: PayoffTensor) -> bool:
        return bool(np.all(self.lower <= game.payoffs) and np.all(game.payoffs <= self.upper))


@dataclass
class UncertainResponseGraph:
    """States with settled edges ``certain`` (directed ``(from, to, k)``), open edges
    ``uncertain`` and exact ties ``ties`` (both unordered ``(a, b, k)`` with ``a < b``)."""

    states: list
    certain: list
    uncertain: list
    ties: list
    eta: float
    population_mode: str = MULTI

    @property
    def num_states(self) -> int:
        return len(self.states)

    def certain_adjacency(self):
        """Forward and backward adjacency over settled edges (ties count both ways)."""
        n = self.num_states
        fwd = [[] for _ in range(n)]
        bwd = [[] for _ in range(n)]
        for u, v, _ in self.certain:
            fwd[u].append(v)
            bwd[v].append(u)
        for a, b, _ in self.ties:
            fwd[a].append(b)
            fwd[b].append(a)
            bwd[a].append(b)
            bwd[b].append(a)
        return fwd, bwd

    def uncertain_neighbors(self):
        nbrs = [[] for _ in range(self.num_states)]
        for a, b, _ in self.uncertain:
            nbrs[a].append(b)
            nbrs[b].append(a)
        return nbrs

    def orient(self, choice) -> ResponseGraph:
        """Response graph with open edge ``i`` pointing ``a -> b`` when ``choice[i]`` is true."""
        edges, flags = {}, {}
        for u, v, k in self.certain:
            key = (min(u, v), max(u, v), k)
            edges[key] = 1 if u < v else -1
            flags[key] = "certain"
        for key in self.ties:
            edges[tuple(key)] = 0
            flags[tuple(key)] = "tie"
        for (a, b, k), c in zip(self.uncertain, choice):
            edges[(a, b, k)] = 1 if c else -1
            flags[(a, b, k)] = "uncertain"
        return ResponseGraph(list(self.states), edges, flags, self.population_mode)


def _comparison_intervals(bounds: PayoffBounds, mode: str):
    """(states, a, b, k, interval at a, interval at b, eta) for every unordered comparison."""
    counts = bounds.strategy_counts
    if mode == MULTI:
        from metaeval.game import GameShape

        shape = GameShape(counts)
        src, dst, player = _deviation_arrays(shape)
        keep = src < dst
        src, dst, player = src[keep], dst[keep], player[keep]
        lo = bounds.lower.reshape(len(counts), -1)
        hi = bounds.upper.reshape(len(counts), -1)
        return (shape.profiles(), src, dst, player, (lo[player, src], hi[player, src]),
                (lo[player, dst], hi[player, dst]), shape.eta)
    if mode != SINGLE:
        raise InputError(f"unknown population mode {mode!r}")
    if len(counts) != 2 or counts[0] != counts[1]:
        raise InputError("single-population mode needs a square two-player table")
    n = counts[0]
    a, b = np.triu_indices(n, 1)
    lo1, hi1 = bounds.lower[0], bounds.upper[0]
    # the resident a scores M^1(a, b) and the mutant b scores M^1(b, a)
    return (list(range(n)), a, b, np.zeros(len(a), dtype=int), (lo1[a, b], hi1[a, b]),
            (lo1[b, a], hi1[b, a]), 1.0 / (n - 1) if n > 1 else 0.0)


def classify_edges(bounds: PayoffBounds, population_mode: str = MULTI) -> UncertainResponseGraph:
    """Split the comparisons into settled, open and tied edges.

    An edge is settled toward the better state when the two payoff intervals
    do not overlap; intervals that only touch at an endpoint also count as
    settled. Two identical zero-width intervals make a tie. Anything else is
    open.
    """
    states, src, dst, player, (la, ua), (lb, ub), eta = _comparison_intervals(bounds, population_mode)
    certain, uncertain, ties = [], [], []
    for i in range(len(src)):
        a, b, k = int(src[i]), int(dst[i]), int(player[i])
        if la[i] == ua[i] == lb[i] == ub[i]:
            ties.append((a, b, k))
        elif ua[i] <= lb[i]:
            certain.append((a, b, k))
        elif ub[i] <= la[i]:
            certain.append((b, a, k))
        else:
            uncertain.append((a, b, k))
    return UncertainResponseGraph(states, certain, uncertain, ties, eta, population_mode)


def _reach(start, adj, allowed=None):
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in seen and (allowed is None or v in allowed):
                seen.add(v)
                queue.append(v)
    return seen


@dataclass(frozen=True)
class MembershipResult:
    excludable: bool
    forced_ancestors: frozenset
    forced_descendants: frozenset


def mcc_membership_possible(s: int, graph: UncertainResponseGraph) -> MembershipResult:
    """Decide whether some orientation of the open edges leaves ``s`` outside every
    sink component (``excludable``), in which case the least weight of ``s`` is 0.

    Forced ancestors reach ``s`` along settled edges and forced descendants are
    reached from ``s`` along them. A descendant that is not an ancestor makes
    ``s`` excludable at once. Otherwise open edges leaving the ancestor set are
    pointed outward, and open edges between ancestors that can leave the set
    and those that cannot are repeatedly pointed toward the former until
    nothing changes. ``s`` is excludable exactly when it can then leave the set.
    """
    n = graph.num_states
    if not 0 <= s < n:
        raise InputError(f"state {s} outside [0, {n})")
    fwd, bwd = graph.certain_adjacency()
    ancestors = _reach(s, bwd)
    descendants = _reach(s, fwd)
    if not descendants <= ancestors:
        return MembershipResult(True, frozenset(ancestors), frozenset(descendants))
    # directed edges available to the adversary, growing as open edges are oriented
    adj = [list(x) for x in fwd]
    pending = []
    for a, b, _ in graph.uncertain:
        ina, inb = a in ancestors, b in ancestors
        if ina and not inb:
            adj[a].append(b)
        elif inb and not ina:
            adj[b].append(a)
        elif ina and inb:
            pending.append((a, b))
    while True:
        can_leave = _can_leave(ancestors, adj)
        if can_leave == ancestors:
            break
        still = []
        changed = False
        for a, b in pending:
            if (a in can_leave) != (b in can_leave):
                if a in can_leave:
                    adj[b].append(a)
                else:
                    adj[a].append(b)
                changed = True
            else:
                still.append((a, b))
        pending = still
        if not changed:
            break
    return MembershipResult(s in can_leave, frozenset(ancestors), frozenset(descendants))


def _can_leave(region, adj):
    """States of ``region`` with a directed path to a state outside it."""
    rev = {}
    frontier = deque()
    out = set()
    for u in region:
        for v in adj[u]:
            if v not in region:
                if u not in out:
                    out.add(u)
                    frontier.append(u)
            else:
                rev.setdefault(v, []).append(u)
    while frontier:
        v = frontier.popleft()
        for u in rev.get(v, ()):
            if u not in out:
                out.add(u)
                frontier.append(u)
    return out


# --- stochastic shortest path ---------------------------------------------

class _SSP:
    """Return-time control problem for target ``s``.

    Settled out-edges move at rate ``eta``, ties at ``eta / m`` and every open
    edge chosen as outward at rate ``eta``; unchosen open edges carry no flow.
    """

    def __init__(self, s, graph: UncertainResponseGraph, m):
        self.s = s
        self.n = graph.num_states
        eta = graph.eta
        self.fixed = [[] for _ in range(self.n)]  # (target, rate)
        for u, v, _ in graph.certain:
            self.fixed[u].append((v, eta))
        for a, b, _ in graph.ties:
            self.fixed[a].append((b, eta / m))
            self.fixed[b].append((a, eta / m))
        self.open = graph.uncertain_neighbors()
        self.eta = eta

    def evaluate(self, domain, policy):
        """Hitting times of ``s`` (0 at ``s``) on ``domain`` and the return time at ``s``."""
        s = self.s
        others = [u for u in domain if u != s]
        pos = {u: i for i, u in enumerate(others)}
        size = len(others)
        a = np.zeros((size, size))
        for u in others:
            i = pos[u]
            for v, r in self._row(u, policy):
                a[i, i] += r
                if v != s:
                    a[i, pos[v]] -= r
        a /= self.eta
        rhs = np.full(size, 1.0 / self.eta)
        phi = np.zeros(self.n)
        if size:
            try:
                sol = np.linalg.solve(a, rhs)
            except np.linalg.LinAlgError as exc:
                raise ContractViolation("return-time system is singular for the current policy") from exc
            if not np.all(np.isfinite(sol)) or np.any(sol < 0):
                raise ContractViolation("policy evaluation produced invalid hitting times")
            phi[others] = sol
        lam = 1.0 + sum(r * phi[v] for v, r in self._row(s, policy) if v != s)
        return phi, lam

    def _row(self, u, policy):
        return self.fixed[u] + [(v, self.eta) for v in policy[u]]


def _infinite_min_set(ssp: _SSP):
    """States whose hitting time of ``s`` is infinite under every policy."""
    n, s = ssp.n, ssp.s
    bad = set()
    while True:
        # reverse reachability to s through states not yet known bad
        rev = [[] for _ in range(n)]
        for u in range(n):
            if u in bad:
                continue
            for v, _ in ssp.fixed[u]:
                rev[v].append(u)
            for v in ssp.open[u]:
                if v not in bad:
                    rev[v].append(u)
        good = _reach(s, rev) if s not in bad else set()
        new_bad = set(range(n)) - good
        # a settled move into a bad state is unavoidable
        grew = True
        while grew:
            grew = False
            for u in range(n):
                if u not in new_bad and u != s and any(v in new_bad for v, _ in ssp.fixed[u]):
                    new_bad.add(u)
                    grew = True
        if new_bad == bad:
            return bad
        bad = new_bad


def _bfs_distance(ssp: _SSP, domain):
    s = ssp.s
    rev = {u: [] for u in domain}
    for u in domain:
        for v, _ in ssp.fixed[u]:
            if v in rev:
                rev[v].append(u)
        for v in ssp.open[u]:
            if v in rev:
                rev[v].append(u)
    dist = {s: 0}
    queue = deque([s])
    while queue:
        v = queue.popleft()
        for u in rev[v]:
            if u not in dist:
                dist[u] = dist[v] + 1
                queue.append(u)
    return dist


def _minimize(ssp: _SSP, max_rounds: int):
    s = ssp.s
    bad = _infinite_min_set(ssp)
    if s in bad or any(v in bad for v, _ in ssp.fixed[s]):
        return math.inf, None
    domain = [u for u in range(ssp.n) if u not in bad]
    dist = _bfs_distance(ssp, set(domain))
    policy = [[] for _ in range(ssp.n)]
    for u in domain:
        if u != s:
            policy[u] = sorted(v for v in ssp.open[u] if v not in bad and dist[v] < dist[u])
    for _ in range(max_rounds):
        phi, lam = ssp.evaluate(domain, policy)
        changed = False
        for u in domain:
            if u == s:
                continue
            cur = set(policy[u])
            new = []
            for v in ssp.open[u]:
                if v in bad:
                    continue
                cont = 0.0 if v == s else phi[v]
                if cont < phi[u] - 1e-12 * max(1.0, phi[u]) or (v in cur and cont <= phi[u]):
                    new.append(v)
            new.sort()
            if new != policy[u]:
                policy[u] = new
                changed = True
        if not changed:
            return lam, policy
    raise ContractViolation("policy iteration did not settle")


def _maximize(ssp: _SSP, max_rounds: int):
    s, n = ssp.s, ssp.n
    fwd_all = [[v for v, _ in ssp.fixed[u]] + list(ssp.open[u]) for u in range(n)]
    # states from which s can be avoided forever by some choice of open edges
    rev_fixed = [[] for _ in range(n)]
    for u in range(n):
        for v, _ in ssp.fixed[u]:
            rev_fixed[v].append(u)
    forced_anc = _reach(s, rev_fixed)
    trap = set(range(n)) - forced_anc
    grew = True
    while grew:
        grew = False
        for u in range(n):
            if u not in trap and u != s and any(v in trap for v in fwd_all[u]):
                trap.add(u)
                grew = True
    domain_set = _reach(s, fwd_all)
    if domain_set & trap:
        raise ContractViolation(f"return time to state {s} diverges in maximize mode")
    domain = sorted(domain_set)
    policy = [[] for _ in range(n)]
    policy[s] = sorted(ssp.open[s])
    for _ in range(max_rounds):
        phi, lam = ssp.evaluate(domain, policy)
        changed = False
        for u in domain:
            if u == s:
                continue
            cur = set(policy[u])
            new = []
            for v in ssp.open[u]:
                cont = 0.0 if v == s else phi[v]
                if cont > phi[u] + 1e-12 * max(1.0, phi[u]) or (v in cur and cont >= phi[u]):
                    new.append(v)
            new.sort()
            if new != policy[u]:
                policy[u] = new
                changed = True
        if not changed:
            return lam, policy
    raise ContractViolation("policy iteration did not settle")


def ssp_extremal_return_time(s: int, graph: UncertainResponseGraph, objective: str = MINIMIZE,
                             m: int = 50, max_rounds: int = 10_000) -> float:
    """Least (``minimize``) or greatest (``maximize``) mean return time to ``s`` over all
    orientations of the open edges.

    Each state chooses its outward open edges independently. For a fixed
    estimate of hitting times the choice separates edge by edge: an edge is
    worth taking exactly when the hitting time from its far end beats (or,
    when maximising, exceeds) the state's own. Policy iteration with exact
    linear solves therefore reaches the optimum. Minimisation returns
    ``math.inf`` when ``s`` is transient in every orientation; maximisation
    raises ``ContractViolation`` when the return time can be made infinite
    (callers check excludability first).
    """
    if not 0 <= s < graph.num_states:
        raise InputError(f"state {s} outside [0, {graph.num_states})")
    ssp = _SSP(s, graph, m)
    if objective == MINIMIZE:
        return _minimize(ssp, max_rounds)[0]
    if objective == MAXIMIZE:
        return _maximize(ssp, max_rounds)[0]
    raise InputError(f"objective must be {MINIMIZE!r} or {MAXIMIZE!r}")


@dataclass(frozen=True)
class RankingInterval:
    state: object
    pi_lo: float
    pi_hi: float
    excludable: bool
    return_time_min: float
    return_time_max: float

    @property
    def width(self) -> float:
        return self.pi_hi - self.pi_lo


def _resolve_state(s, graph):
    if isinstance(s, (int, np.integer)):
        return int(s)
    key = tuple(s) if isinstance(s, (list, tuple)) else s
    try:
        return graph.states.index(key)
    except ValueError:
        raise InputError(f"unknown state {s!r}") from None


def _interval_for(idx, graph, m) -> RankingInterval:
    lam_min = ssp_extremal_return_time(idx, graph, MINIMIZE, m)
    member = mcc_membership_possible(idx, graph)
    if member.excludable:
        lam_max = math.inf
    else:
        lam_max = ssp_extremal_return_time(idx, graph, MAXIMIZE, m)
    pi_hi = 0.0 if math.isinf(lam_min) else 1.0 / lam_min
    pi_lo = 0.0 if math.isinf(lam_max) else 1.0 / lam_max
    if not 0 <= pi_lo <= pi_hi + 1e-12 or pi_hi > 1 + 1e-12:
        raise ContractViolation(f"inconsistent interval [{pi_lo}, {pi_hi}] for state {idx}")
    return RankingInterval(graph.states[idx], pi_lo, min(pi_hi, 1.0), member.excludable, lam_min, lam_max)


def ranking_weight_interval(s, bounds: PayoffBounds, params: AlphaRankParams | None = None) -> RankingInterval:
    """Interval ``[inf pi(s), sup pi(s)]`` of infinite-alpha ranking weight over tables within ``bounds``.

    ``s`` is a state index or a profile tuple (strategy index in the
    single-population model).
    """
    params = params or AlphaRankParams()
    graph = classify_edges(bounds, params.population_mode)
    return _interval_for(_resolve_state(s, graph), graph, int(params.m))


def all_ranking_intervals(bounds: PayoffBounds, params: AlphaRankParams | None = None) -> list[RankingInterval]:
    """:func:`ranking_weight_interval` for every state, in state order."""
    params = params or AlphaRankParams()
    graph = classify_edges(bounds, params.population_mode)
    return [_interval_for(i, graph, int(params.m)) for i in range(graph.num_states)]


def write_intervals_csv(rows, path, level=None, append: bool = False) -> None:
    """Write ``(state, pi_lo, pi_hi, payoff_uncertainty_level)`` rows.

    ``rows`` is a list of :class:`RankingInterval` (tagged with ``level``) or
    of ``(level, RankingInterval)`` pairs.
    """
    mode = "a" if append else "w"
    with open(path, mode, newline="") as fh:
        w = csv.writer(fh)
        if not append:
            w.writerow(["state", "pi_lo", "pi_hi", "payoff_uncertainty_level"])
        for row in rows:
            lvl, iv = row if isinstance(row, tuple) else (level, row)
            state = "-".join(map(str, iv.state)) if isinstance(iv.state, tuple) else iv.state
            w.writerow([state, repr(float(iv.pi_lo)), repr(float(iv.pi_hi)), "" if lvl is None else lvl])


def enumerate_orientations(graph: UncertainResponseGraph):
    """Every response graph compatible with ``graph`` (``2^|open|`` of them)."""
    for choice in itertools.product((True, False), repeat=len(graph.uncertain)):
        yield graph.orient(choice)
