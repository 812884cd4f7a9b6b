import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from metaeval.game import PayoffTensor

settings.register_profile("repo", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")

ACCEPTANCE = {}


@pytest.fixture
def sink_game():
    """Two-strategy symmetric win-loss game whose response graph drains into (0, 0)."""
    m1 = np.array([[0.5, 0.85], [0.15, 0.5]])
    return PayoffTensor.from_bimatrix(m1, 1.0 - m1)


def record_acceptance(number, passed, detail):
    ACCEPTANCE[number] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
