"""alpha-Rank: evolutionary transition models, invariant distributions and response graphs.

Two population models are supported. In the multi-population model the
Markov chain runs over strategy profiles and moves between profiles that
differ in one player's strategy. In the single-population model (two-player
symmetric games) the chain runs over the strategies of one player, and a
mutant ``sigma`` invading a population of ``s`` is scored by
``M^1(sigma, s) - M^1(s, sigma)``.

The sample-complexity calculators at the bottom of the module give the number
of i.i.d. plays per profile that suffice for accurate rankings, at finite and
infinite selection intensity.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy import sparse

from metaeval.errors import ContractViolation, ConvergenceError, InputError
from metaeval.game import GameShape, PayoffTensor

logger = logging.getLogger(__name__)

MULTI = "multi-population"
SINGLE = "single-population"
DEFAULT_SWEEP = tuple(10.0 ** -i for i in range(1, 9))
DENSE_LIMIT = 512

__all__ = [
    "AlphaRankParams",
    "TransitionModel",
    "RankingDistribution",
    "ResponseGraph",
    "ComplexityInstance",
    "fixation_ratio",
    "build_transition_matrix",
    "build_infinite_alpha_transitions",
    "stationary_distribution",
    "alpharank",
    "response_graph",
    "find_mccs",
    "mcc_stationary",
    "order_by_mass",
    "sample_complexity_finite_alpha",
    "sample_complexity_infinite_alpha",
    "finite_alpha_epsilon_cap",
]


@dataclass(frozen=True)
class AlphaRankParams:
    """Parameters of the ranking dynamics.

    ``alpha=math.inf`` selects the infinite-alpha limit, where improving moves
    happen at rate ``eta``, neutral moves at ``eta / m`` and worsening moves at
    ``eta * perturbation``. ``perturbation=None`` in that mode runs the
    decreasing sweep over :data:`DEFAULT_SWEEP`.
    """

    alpha: float = math.inf
    m: int = 50
    perturbation: float | None = None
    population_mode: str = MULTI
    sweep: tuple[float, ...] = DEFAULT_SWEEP
    tie_tol: float = 1e-8

    def __post_init__(self):
        if self.population_mode not in (MULTI, SINGLE):
            raise InputError(f"population_mode must be {MULTI!r} or {SINGLE!r}")
        if not (self.alpha >= 0):
            raise InputError(f"alpha must be nonnegative, got {self.alpha}")
        if int(self.m) != self.m or self.m < 1:
            raise InputError(f"population size m must be a positive integer, got {self.m}")
        if math.isfinite(self.alpha) and self.m < 2:
            raise InputError("finite alpha needs m >= 2")
        if self.perturbation is not None and not 0 < self.perturbation < 1:
            raise InputError(f"perturbation must lie in (0, 1), got {self.perturbation}")
        if any(not 0 < e < 1 for e in self.sweep) or len(self.sweep) == 0:
            raise InputError("sweep levels must lie in (0, 1)")

    @property
    def infinite(self) -> bool:
        return math.isinf(self.alpha)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["alpha"] = "inf" if self.infinite else self.alpha
        d["sweep"] = list(self.sweep)
        return d


@dataclass
class TransitionModel:
    """Row-stochastic transition matrix over ``states`` with normalisation ``eta``."""

    states: list
    matrix: np.ndarray | sparse.csr_matrix
    eta: float
    population_mode: str = MULTI

    def dense(self) -> np.ndarray:
        return self.matrix.toarray() if sparse.issparse(self.matrix) else self.matrix


@dataclass
class RankingDistribution:
    """Invariant distribution over states and the induced ordering.

    ``ordering`` lists groups of states in decreasing mass; states whose
    masses are within ``tie_tol`` of a group's leading mass share the group.
    """

    states: list
    pi: np.ndarray
    ordering: list[list]
    params: dict = field(default_factory=dict)

    def mass(self, state) -> float:
        return float(self.pi[self.states.index(_as_state(state))])

    def ranks(self) -> dict:
        """Map state to 0-based rank of its tie group."""
        return {s: r for r, group in enumerate(self.ordering) for s in group}

    def to_json(self) -> str:
        return json.dumps({
            "states": [list(s) if isinstance(s, tuple) else s for s in self.states],
            "pi": [float(x) for x in self.pi],
            "ordering": [[list(s) if isinstance(s, tuple) else s for s in g] for g in self.ordering],
            "params": self.params,
        }, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "RankingDistribution":
        doc = json.loads(text)
        states = [_as_state(s) for s in doc["states"]]
        return cls(states, np.array(doc["pi"], float),
                   [[_as_state(s) for s in g] for g in doc["ordering"]], doc.get("params", {}))


def _as_state(s):
    return tuple(s) if isinstance(s, (list, tuple)) else s


def order_by_mass(pi, tie_tol: float = 1e-8, relative: bool = False) -> list[list[int]]:
    """Group state indices into buckets of decreasing mass.

    Indices are visited in decreasing mass; an index joins
    the current bucket when its mass is within ``tie_tol`` of the bucket's
    first (largest) mass, otherwise it opens a new bucket. With ``relative``
    the tolerance is ``tie_tol`` times that first mass. Each bucket lists
    its indices in increasing order.
    """
    pi = np.asarray(pi, float)
    order = np.argsort(-pi, kind="stable")
    buckets: list[list[int]] = []
    top = None
    for i in order:
        if buckets and top - pi[i] <= (tie_tol * top if relative else tie_tol):
            buckets[-1].append(int(i))
        else:
            buckets.append([int(i)])
            top = pi[i]
    return [sorted(b) for b in buckets]


# --- transition law --------------------------------------------------------

def _log_expm1(y):
    # log(e^y - 1) for y > 0
    return y + np.log(-np.expm1(-y))


def fixation_ratio(x, m: int):
    """``(1 - exp(-x)) / (1 - exp(-m x))`` evaluated without overflow; ``1/m`` at ``x = 0``.

    ``x`` is the selection intensity times the payoff difference. For large
    negative ``x`` the value underflows smoothly to 0 instead of producing
    ``inf / inf``.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x > 0
    neg = x < 0
    zero = ~(pos | neg)
    xp = x[pos]
    out[pos] = np.expm1(-xp) / np.expm1(-m * xp)
    y = -x[neg]
    small = m * y < 700.0
    res = np.empty_like(y)
    ys = y[small]
    res[small] = np.expm1(ys) / np.expm1(m * ys)
    yl = y[~small]
    # e^{-(m-1) y} * (1 - e^{-y}) / (1 - e^{-m y})
    with np.errstate(under="ignore"):
        res[~small] = np.exp(-(m - 1) * yl) * (np.expm1(-yl) / np.expm1(-m * yl))
    out[neg] = res
    out[zero] = 1.0 / m
    return out if out.ndim else float(out)


def _deviation_arrays(shape: GameShape):
    """Flat source index, flat target index and deviating player for every single deviation."""
    counts = shape.strategy_counts
    n = shape.num_profiles
    coords = np.unravel_index(np.arange(n), counts)
    src, dst, player = [], [], []
    for k, c in enumerate(counts):
        for shift in range(1, c):
            new = list(coords)
            new[k] = (coords[k] + shift) % c
            src.append(np.arange(n))
            dst.append(np.ravel_multi_index(new, counts))
            player.append(np.full(n, k))
    if not src:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, empty
    return np.concatenate(src), np.concatenate(dst), np.concatenate(player)


def _comparisons(game: PayoffTensor, mode: str):
    """(states, src, dst, payoff difference, eta) for the chosen population model."""
    if mode == MULTI:
        shape = game.shape
        src, dst, player = _deviation_arrays(shape)
        flat = game.flat()
        diff = flat[player, dst] - flat[player, src]
        return shape.profiles(), src, dst, diff, shape.eta
    if game.num_players != 2 or not game.shape.is_square():
        raise InputError("single-population mode needs a square two-player game")
    n = game.shape.strategy_counts[0]
    m1 = game.payoffs[0]
    src, dst = np.nonzero(~np.eye(n, dtype=bool))
    diff = m1[dst, src] - m1[src, dst]
    eta = 1.0 / (n - 1) if n > 1 else 0.0
    return list(range(n)), src, dst, diff, eta


def _assemble(n, src, dst, vals):
    if n <= DENSE_LIMIT:
        c = np.zeros((n, n))
        c[src, dst] = vals
        np.fill_diagonal(c, 0.0)
        off = c.sum(axis=1)
        c[np.arange(n), np.arange(n)] = 1.0 - off
        return c
    off = np.bincount(src, weights=vals, minlength=n)
    rows = np.concatenate([src, np.arange(n)])
    cols = np.concatenate([dst, np.arange(n)])
    data = np.concatenate([vals, 1.0 - off])
    return sparse.csr_matrix((data, (rows, cols)), shape=(n, n))


def build_transition_matrix(game: PayoffTensor, params: AlphaRankParams) -> TransitionModel:
    """Finite-alpha transition matrix.

    Each single deviation ``s -> sigma`` by player ``k`` has probability
    ``eta * fixation_ratio(alpha * (M^k(sigma) - M^k(s)), m)``; the diagonal
    takes the remaining mass.
    """
    if params.infinite:
        raise InputError("use build_infinite_alpha_transitions for alpha = inf")
    states, src, dst, diff, eta = _comparisons(game, params.population_mode)
    vals = eta * fixation_ratio(params.alpha * diff, int(params.m))
    return TransitionModel(states, _assemble(len(states), src, dst, vals), eta, params.population_mode)


def build_infinite_alpha_transitions(game: PayoffTensor, params: AlphaRankParams,
                                     perturbation: float | None = None) -> TransitionModel:
    """Perturbed infinite-alpha transition matrix.

    Improving deviations get ``eta``, payoff ties ``eta / m`` and worsening
    deviations ``eta * perturbation``. The diagonal absorbs the rest, so the
    chain is irreducible for any positive perturbation.
    """
    eps = params.perturbation if perturbation is None else perturbation
    if eps is None:
        raise InputError("infinite-alpha transitions need a perturbation level")
    if not 0 < eps < 1:
        raise InputError(f"perturbation must lie in (0, 1), got {eps}")
    states, src, dst, diff, eta = _comparisons(game, params.population_mode)
    vals = np.where(diff > 0, eta, np.where(diff < 0, eta * eps, eta / params.m))
    return TransitionModel(states, _assemble(len(states), src, dst, vals), eta, params.population_mode)


# --- invariant distribution ------------------------------------------------

def _gth(p: np.ndarray) -> np.ndarray:
    """Grassmann-Taksar-Heyman elimination; subtraction-free, so accurate for tiny rates."""
    a = np.array(p, dtype=float)
    n = a.shape[0]
    for k in range(n - 1):
        scale = a[k, k + 1:].sum()
        if scale <= 0:
            raise ConvergenceError("transition matrix is reducible", residual=math.inf)
        a[k + 1:, k] /= scale
        a[k + 1:, k + 1:] += np.outer(a[k + 1:, k], a[k, k + 1:])
    x = np.zeros(n)
    x[-1] = 1.0
    for k in range(n - 2, -1, -1):
        x[k] = x[k + 1:] @ a[k + 1:, k]
    return x / x.sum()


def stationary_distribution(model: TransitionModel, tol: float = 1e-10,
                            max_iter: int = 1_000_000, tie_tol: float = 1e-8) -> RankingDistribution:
    """Invariant distribution of an irreducible chain.

    Chains with at most 512 states are solved directly by GTH elimination;
    larger ones by power iteration. ``ConvergenceError`` (carrying the final
    residual) is raised if ``||pi C - pi||_inf > tol``.
    """
    c = model.matrix
    n = c.shape[0]
    if n == 1:
        pi = np.ones(1)
    elif not sparse.issparse(c):
        pi = _gth(c)
    else:
        ct = c.T.tocsr()
        pi = np.full(n, 1.0 / n)
        for _ in range(max_iter):
            nxt = ct @ pi
            nxt /= nxt.sum()
            if np.max(np.abs(nxt - pi)) <= tol * 1e-4:
                pi = nxt
                break
            pi = nxt
    residual = float(np.max(np.abs(c.T @ pi - pi))) if n > 1 else 0.0
    if not residual <= tol:
        raise ConvergenceError(f"stationary residual {residual:.3e} exceeds {tol:.1e}", residual)
    ordering = [[model.states[i] for i in g] for g in order_by_mass(pi, tie_tol)]
    return RankingDistribution(list(model.states), pi, ordering,
                               {"residual": residual, "eta": model.eta})


def alpharank(game: PayoffTensor, params: AlphaRankParams | None = None,
              tol: float = 1e-10) -> RankingDistribution:
    """Rank the states of ``game`` by the invariant distribution of the alpha-Rank chain.

    At infinite alpha without a fixed perturbation, perturbation levels are
    swept from large to small and the first level whose ordering agrees with
    the previous level's is reported (``params["converged"]`` records
    whether that happened). Orderings are compared with a tolerance relative
    to each bucket's mass, since transient masses shrink with the
    perturbation while their ratios settle.
    """
    params = params or AlphaRankParams()
    if not params.infinite:
        dist = stationary_distribution(build_transition_matrix(game, params), tol, tie_tol=params.tie_tol)
        dist.params.update(params.as_dict())
        return dist
    levels = [params.perturbation] if params.perturbation is not None else list(params.sweep)
    prev = None
    dist = None
    converged = len(levels) == 1
    used = levels[0]
    for eps in levels:
        dist = stationary_distribution(build_infinite_alpha_transitions(game, params, eps), tol,
                                       tie_tol=params.tie_tol)
        used = eps
        shape_of_order = order_by_mass(dist.pi, params.tie_tol, relative=True)
        if prev is not None and shape_of_order == prev:
            converged = True
            break
        prev = shape_of_order
    if not converged:
        logger.warning("perturbation sweep did not settle on one ordering; reporting eps=%g", used)
    dist.params.update(params.as_dict())
    dist.params.update({"perturbation_used": used, "converged": converged})
    return dist


# --- response graphs -------------------------------------------------------

CERTAIN = "certain"
UNCERTAIN = "uncertain"
TIE = "tie"


@dataclass
class ResponseGraph:
    """Single-deviation comparison graph.

    ``edges`` maps ``(a, b, k)`` (flat state indices ``a < b``, deviating
    player ``k``) to the orientation: ``+1`` for ``a -> b``, ``-1`` for
    ``b -> a`` and ``0`` for a tie. ``flags`` gives each edge's status
    (``"certain"``, ``"uncertain"`` or ``"tie"``).
    """

    states: list
    edges: dict
    flags: dict = field(default_factory=dict)
    population_mode: str = MULTI

    @property
    def num_states(self) -> int:
        return len(self.states)

    def directed_edges(self) -> list[tuple[int, int, int]]:
        """Directed ``(from, to, k)`` triples; ties appear in both directions."""
        out = []
        for (a, b, k), o in sorted(self.edges.items()):
            if o >= 0:
                out.append((b, a, k) if o == 0 else (a, b, k))
            if o <= 0:
                out.append((b, a, k) if o < 0 else (a, b, k))
        return out

    def successors(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in self.states]
        for u, v, _ in self.directed_edges():
            adj[u].append(v)
        return adj

    def orientation(self, u: int, v: int, k: int = 0) -> int:
        """+1 if the edge points ``u -> v``, -1 if ``v -> u``, 0 for a tie."""
        if u < v:
            return self.edges[(u, v, k)]
        return -self.edges[(v, u, k)]

    def edge_list(self) -> list[dict]:
        out = []
        for (a, b, k), o in sorted(self.edges.items()):
            src, dst = (a, b) if o >= 0 else (b, a)
            out.append({"from": _jsonable(self.states[src]), "to": _jsonable(self.states[dst]),
                        "player": k, "tie": o == 0, "flag": self.flags.get((a, b, k), CERTAIN)})
        return out


def _jsonable(s):
    return list(s) if isinstance(s, tuple) else s


def response_graph(game: PayoffTensor, population_mode: str = MULTI) -> ResponseGraph:
    """Better-response graph of ``game``.

    Each single deviation is oriented toward the state that is strictly
    better for the deviating player (for the single-population model: toward
    the mutant when ``M^1(sigma, s) > M^1(s, sigma)``). Exact equality gives a
    tie edge.
    """
    states, src, dst, diff, _ = _comparisons(game, population_mode)
    edges, flags = {}, {}
    if population_mode == MULTI:
        _, _, player = _deviation_arrays(game.shape)
    else:
        player = np.zeros(len(src), dtype=int)
    for a, b, k, d in zip(src.tolist(), dst.tolist(), player.tolist(), diff.tolist()):
        if a > b:
            continue
        o = 1 if d > 0 else (-1 if d < 0 else 0)
        edges[(a, b, k)] = o
        flags[(a, b, k)] = TIE if o == 0 else CERTAIN
    return ResponseGraph(states, edges, flags, population_mode)


def _tarjan(adj: Sequence[Sequence[int]]) -> list[list[int]]:
    """Strongly connected components (iterative Tarjan)."""
    n = len(adj)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] >= 0:
            continue
        work = [(root, 0)]
        while work:
            v, i = work.pop()
            if i == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            recurse = False
            nbrs = adj[v]
            while i < len(nbrs):
                w = nbrs[i]
                i += 1
                if index[w] < 0:
                    work.append((v, i))
                    work.append((w, 0))
                    recurse = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if recurse:
                continue
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(sorted(comp))
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
    return comps


def sink_components(adj: Sequence[Sequence[int]]) -> list[list[int]]:
    """Strongly connected components with no edge leaving them, sorted by smallest member."""
    comps = _tarjan(adj)
    label = [0] * len(adj)
    for c, comp in enumerate(comps):
        for v in comp:
            label[v] = c
    sinks = [comp for c, comp in enumerate(comps)
             if all(label[w] == c for v in comp for w in adj[v])]
    return sorted(sinks)


def find_mccs(graph: ResponseGraph) -> list[list]:
    """Sink strongly connected components of ``graph`` as lists of states.

    Tie edges count in both directions.
    """
    return [[graph.states[i] for i in comp] for comp in sink_components(graph.successors())]


def mcc_stationary(graph: ResponseGraph, m: int = 50) -> np.ndarray:
    """Zero-perturbation limit restricted to each MCC, giving every MCC full mass.

    Returns a vector where each MCC's states carry that MCC's own stationary
    distribution (under rate ``eta`` per out-edge and ``eta / m`` per tie) and
    transient states carry 0. The vector therefore sums to the number of
    MCCs; divide by that count for an equal split.
    """
    n = graph.num_states
    adj = graph.successors()
    rate = np.zeros((n, n))
    for (a, b, k), o in graph.edges.items():
        if o > 0:
            rate[a, b] += 1.0
        elif o < 0:
            rate[b, a] += 1.0
        else:
            rate[a, b] += 1.0 / m
            rate[b, a] += 1.0 / m
    out = np.zeros(n)
    for comp in sink_components(adj):
        sub = rate[np.ix_(comp, comp)]
        scale = sub.sum(axis=1).max()
        if len(comp) == 1:
            out[comp[0]] = 1.0
            continue
        p = sub / (2 * scale)
        np.fill_diagonal(p, 1.0 - p.sum(axis=1))
        out[comp] = _gth(p)
    return out


# --- sample complexity -----------------------------------------------------

@dataclass(frozen=True)
class ComplexityInstance:
    """Inputs of the sample-complexity calculators.

    Only the fields a calculator uses need to be set; ``eta`` defaults to the
    game shape's value.
    """

    shape: GameShape
    m_max: float = 1.0
    delta: float = 0.1
    alpha: float | None = None
    m: int | None = None
    epsilon: float | None = None
    gap: float | None = None
    eta: float | None = None

    @property
    def num_profiles(self) -> int:
        return self.shape.num_profiles

    @property
    def eta_value(self) -> float:
        return self.shape.eta if self.eta is None else float(self.eta)


def _positive(name, value):
    if value is None or not (value > 0) or not math.isfinite(value):
        raise InputError(f"{name} must be positive and finite, got {value}")


def _check_delta(delta):
    if not 0 < delta < 1:
        raise InputError(f"delta must lie in (0, 1), got {delta}")


def surjection_sum(n_profiles: int) -> int:
    """``sum_{n=1}^{|S|-1} binom(|S|, n) n^{|S|}`` as an exact integer."""
    return sum(math.comb(n_profiles, n) * n ** n_profiles for n in range(1, n_profiles))


def finite_alpha_epsilon_cap(n_profiles: int) -> float:
    """Admissible upper end for the target error at finite alpha, capped at 1."""
    total = surjection_sum(n_profiles)
    if total == 0:
        return 1.0
    # 18 * 2^{-|S|} * total, evaluated in logs to avoid float overflow
    log_cap = math.log(18) - n_profiles * math.log(2) + math.log(total)
    return 1.0 if log_cap >= 0 else math.exp(log_cap)


def _ceil_above(log_value: float) -> int:
    """Smallest integer strictly greater than ``exp(log_value)``."""
    if log_value > 700:
        raise InputError(f"sample complexity exp({log_value:.1f}) is too large to represent")
    return math.floor(math.exp(log_value)) + 1


def log_sample_complexity_finite_alpha(inst: ComplexityInstance) -> float:
    """Natural log of the finite-alpha right-hand side (before rounding)."""
    for name in ("alpha", "epsilon", "m_max"):
        _positive(name, getattr(inst, name))
    _check_delta(inst.delta)
    if inst.m is None or inst.m < 2:
        raise InputError("population size m >= 2 is required")
    n_prof = inst.num_profiles
    if n_prof < 2:
        raise InputError("the finite-alpha bound needs at least two profiles")
    eta = inst.eta_value
    _positive("eta", eta)
    cap = finite_alpha_epsilon_cap(n_prof)
    if not inst.epsilon < cap:
        raise InputError(f"epsilon={inst.epsilon} outside the admissible range (0, {cap:.6g}); "
                         "the bound is min(18 * 2^-|S| * sum_n C(|S|,n) n^|S|, 1)")
    a, mm, m = inst.alpha, inst.m_max, int(inst.m)
    k = inst.shape.num_players
    x = 2.0 * a * mm
    log_l = math.log(2.0 * a) + x
    # g = eta (e^x - 1) / (e^{m x} - 1)
    log_g = math.log(eta) + float(_log_expm1(x)) - float(_log_expm1(m * x))
    log_total = math.log(surjection_sum(n_prof))
    return (math.log(648.0) + 2 * math.log(mm) + math.log(math.log(2 * n_prof * k / inst.delta))
            + 2 * log_l + 2 * log_total - 2 * math.log(inst.epsilon) - 2 * log_g)


def sample_complexity_finite_alpha(inst: ComplexityInstance) -> int:
    """Plays per profile so that every invariant-distribution entry is within
    ``epsilon`` of the truth with probability ``1 - delta`` (finite alpha).

    Uses ``L = 2 alpha exp(2 alpha M_max)`` and
    ``g = eta (exp(2 alpha M_max) - 1) / (exp(2 alpha m M_max) - 1)``; all
    exponentials are handled in log space.
    """
    return _ceil_above(log_sample_complexity_finite_alpha(inst))


def sample_complexity_infinite_alpha(inst: ComplexityInstance) -> int:
    """Plays per profile for exact recovery of the infinite-alpha chain:
    smallest integer above ``8 Delta^-2 M_max^2 log(2 |S| K / delta)``."""
    _positive("gap Delta", inst.gap)
    _positive("m_max", inst.m_max)
    _check_delta(inst.delta)
    n_prof, k = inst.num_profiles, inst.shape.num_players
    log_value = (math.log(8.0) - 2 * math.log(inst.gap) + 2 * math.log(inst.m_max)
                 + math.log(math.log(2 * n_prof * k / inst.delta)))
    return _ceil_above(log_value)


def min_payoff_gap(game: PayoffTensor) -> float:
    """Smallest absolute payoff difference over all single deviations (0 if any tie)."""
    _, _, _, diff, _ = _comparisons(game, MULTI)
    return float(np.min(np.abs(diff))) if diff.size else math.inf


def check_contract(model: TransitionModel, atol: float = 1e-12) -> None:
    """Raise ``ContractViolation`` unless ``model`` is row-stochastic and nonnegative."""
    c = model.dense()
    if np.any(c < -atol) or np.max(np.abs(c.sum(axis=1) - 1.0)) > atol:
        raise ContractViolation("transition matrix is not row-stochastic")
