"""Confidence intervals for payoff means and the per-check confidence schedule."""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import betaincinv

from metaeval.errors import InputError
from metaeval.game import GameShape

HOEFFDING = "hoeffding"
CLOPPER_PEARSON = "clopper-pearson"

__all__ = [
    "ConfidenceInterval",
    "allocate_confidence",
    "confidence_interval",
    "hoeffding_halfwidth",
    "clopper_pearson",
    "is_resolved",
]


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    mean: float
    method: str
    level: float

    @property
    def width(self) -> float:
        return self.upper - self.lower


def allocation_constant(delta: float, shape: GameShape) -> float:
    """``6 delta / (pi^2 |S| sum_k (|S^k| - 1))``; the per-check level is this over ``t^3``."""
    d = shape.num_deviations
    if d == 0:
        return math.inf
    return 6.0 * delta / (math.pi ** 2 * shape.num_profiles * d)


def allocate_confidence(delta: float, shape: GameShape, t: int) -> float:
    """Failure probability granted to one interval check at time index ``t``.

    Summed over all comparison problems, both profiles and every ``t >= 1``
    these levels add up to at most ``delta``.
    """
    if t < 1:
        raise InputError(f"time index must be >= 1, got {t}")
    if not 0 < delta < 1:
        raise InputError(f"delta must lie in (0, 1), got {delta}")
    return allocation_constant(delta, shape) / float(t) ** 3


def hoeffding_halfwidth(n: int, f: float, span: float = 1.0) -> float:
    """``span * sqrt(log(2/f) / (2n))``."""
    return span * math.sqrt(math.log(2.0 / f) / (2.0 * n))


def clopper_pearson(successes: float, n: int, f: float) -> tuple[float, float]:
    """Exact binomial interval with total miscoverage ``f`` split evenly between tails.

    Non-integer success counts (from rescaled outcomes) are accepted; the beta
    quantiles are continuous in their shape parameters.
    """
    x = successes
    lo = 0.0 if x <= 0 else float(betaincinv(x, n - x + 1, f / 2))
    hi = 1.0 if x >= n else float(betaincinv(x + 1, n - x, 1 - f / 2))
    return lo, hi


def confidence_interval(method: str, mean: float, n: int, f: float,
                        outcome_range=(0.0, 1.0)) -> ConfidenceInterval:
    """Interval for a mean of ``n`` outcomes in ``outcome_range`` at miscoverage ``f``.

    ``hoeffding`` gives ``mean +/- (b - a) sqrt(log(2/f) / (2n))`` (not clipped).
    ``clopper-pearson`` maps the outcomes to [0, 1], inverts the regularised
    incomplete beta function and maps back.
    """
    if n < 1:
        raise InputError("need at least one observation")
    if not 0 < f < 1:
        raise InputError(f"confidence level f must lie in (0, 1), got {f}")
    a, b = outcome_range
    if not a - 1e-12 <= mean <= b + 1e-12:
        raise InputError(f"mean {mean} outside the outcome range {outcome_range}")
    if method == HOEFFDING:
        w = hoeffding_halfwidth(n, f, b - a)
        return ConfidenceInterval(mean - w, mean + w, mean, method, f)
    if method == CLOPPER_PEARSON:
        x = (mean - a) / (b - a) * n
        x = min(max(x, 0.0), float(n))
        lo, hi = clopper_pearson(x, n, f)
        return ConfidenceInterval(a + (b - a) * lo, a + (b - a) * hi, mean, method, f)
    raise InputError(f"unknown interval method {method!r}")


def is_resolved(ci_a: ConfidenceInterval | tuple, ci_b: ConfidenceInterval | tuple,
                epsilon_relax: float | None = None) -> tuple[bool, int]:
    """Whether two intervals separate, and which side is larger.

    With ``epsilon_relax=None`` the intervals must be disjoint; otherwise their
    overlap must be shorter than ``epsilon_relax``. The direction is +1 when
    ``b`` has the larger empirical mean (centre for bare tuples), -1 when
    ``a`` does, and 0 while unresolved.
    """
    la, ua, ma = _unpack(ci_a)
    lb, ub, mb = _unpack(ci_b)
    if la == lb and ua == ub:
        return False, 0
    overlap = min(ua, ub) - max(la, lb)
    if epsilon_relax is None:
        ok = overlap < 0
    else:
        ok = overlap < epsilon_relax
    if not ok or ma == mb:
        # equal means give no direction to report, so the pair stays open
        return False, 0
    return True, 1 if mb > ma else -1


def _unpack(ci):
    if isinstance(ci, ConfidenceInterval):
        return ci.lower, ci.upper, ci.mean
    lo, hi = ci[0], ci[1]
    return lo, hi, 0.5 * (lo + hi)
