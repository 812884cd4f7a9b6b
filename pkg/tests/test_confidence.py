import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from metaeval.confidence import (CLOPPER_PEARSON, HOEFFDING, allocate_confidence, allocation_constant,
                                 clopper_pearson, confidence_interval, hoeffding_halfwidth, is_resolved)
from metaeval.errors import InputError
from metaeval.game import GameShape
from metaeval.rgucb import build_comparison_list


def test_allocation_hand_value():
    f = allocate_confidence(0.1, GameShape((2, 2)), 1)
    assert f == pytest.approx(0.6 / (8 * math.pi ** 2), rel=1e-15)
    assert allocate_confidence(0.1, GameShape((2, 2)), 2) == pytest.approx(f / 8, rel=1e-15)


@pytest.mark.parametrize("counts", [(2, 2), (3, 3), (2, 3, 4), (10, 10)])
def test_allocation_union_bound(counts):
    # each problem checks two intervals for each of the t splits of its time index t;
    # sum_t 2 t c / t^3 = 2 c zeta(2) = 2 c pi^2 / 6
    shape = GameShape(counts)
    delta = 0.1
    c = allocation_constant(delta, shape)
    problems = len(build_comparison_list(shape))
    ts = np.arange(1, 10 ** 6 + 1, dtype=float)
    partial = 2 * c * np.sum(ts / ts ** 3)
    tail = 2 * c / 10 ** 6  # sum_{t > T} 1/t^2 < 1/T
    assert problems * (partial + tail) <= delta * (1 + 1e-12)


def test_hoeffding_hand_value():
    assert hoeffding_halfwidth(50, 0.1) == pytest.approx(math.sqrt(math.log(20) / 100), rel=1e-15)
    assert hoeffding_halfwidth(50, 0.1) == pytest.approx(0.17309, abs=1e-5)
    ci = confidence_interval(HOEFFDING, 0.5, 50, 0.1, (-1.0, 1.0))
    assert ci.upper - ci.mean == pytest.approx(2 * 0.17309, abs=2e-5)


def test_clopper_pearson_zero_successes():
    lo, hi = clopper_pearson(0, 10, 0.05)
    assert lo == 0.0
    assert hi == pytest.approx(1 - 0.025 ** 0.1, rel=1e-12)
    assert hi == pytest.approx(0.30850, abs=1e-5)
    lo, hi = clopper_pearson(10, 10, 0.05)
    assert hi == 1.0 and lo == pytest.approx(0.025 ** 0.1, rel=1e-12)


def test_interval_input_errors():
    with pytest.raises(InputError):
        confidence_interval(HOEFFDING, 0.5, 10, 1.0)
    with pytest.raises(InputError):
        confidence_interval(HOEFFDING, 0.5, 0, 0.1)
    with pytest.raises(InputError):
        confidence_interval("wald", 0.5, 10, 0.1)
    with pytest.raises(InputError):
        allocate_confidence(0.1, GameShape((2, 2)), 0)


@given(st.integers(1, 2000), st.floats(0, 1), st.sampled_from([0.1, 0.01, 1e-4]))
def test_clopper_pearson_inside_clipped_hoeffding(n, p, f):
    mean = round(p * n) / n
    cp = confidence_interval(CLOPPER_PEARSON, mean, n, f)
    h = confidence_interval(HOEFFDING, mean, n, f)
    assert 0.0 <= cp.lower <= mean + 1e-12 and mean - 1e-12 <= cp.upper <= 1.0
    assert cp.lower >= max(h.lower, 0.0) - 1e-12
    assert cp.upper <= min(h.upper, 1.0) + 1e-12


def test_is_resolved_examples():
    assert is_resolved((0.1, 0.3), (0.4, 0.6)) == (True, 1)
    assert is_resolved((0.4, 0.6), (0.1, 0.3)) == (True, -1)
    assert is_resolved((0.1, 0.45), (0.4, 0.6)) == (False, 0)
    assert is_resolved((0.1, 0.45), (0.4, 0.6), 0.1) == (True, 1)
    assert is_resolved((0.2, 0.4), (0.2, 0.4)) == (False, 0)
    assert is_resolved((0.2, 0.4), (0.2, 0.4), 0.5) == (False, 0)


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_is_resolved_antisymmetric(a, b, c, d):
    ia, ib = tuple(sorted((a, b))), tuple(sorted((c, d)))
    r1, d1 = is_resolved(ia, ib)
    r2, d2 = is_resolved(ib, ia)
    assert r1 == r2 and d1 == -d2
