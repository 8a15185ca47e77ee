import numpy as np
import pytest

from popart.design import solve_c_min, solve_h_star
from popart.instances import hard_instance_actions

_ACCEPTANCE_LINES = []


def _record_criterion(num, ok, detail):
    """One pass/fail line per acceptance criterion, echoed at session end."""
    line = f"criterion {num:>2}: {'PASS' if ok else 'FAIL'} - {detail}"
    _ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


@pytest.fixture(scope="session")
def record_criterion():
    return _record_criterion


@pytest.fixture(scope="session")
def hard10():
    return hard_instance_actions(10)


@pytest.fixture(scope="session")
def h_sol10(hard10):
    return solve_h_star(hard10)


@pytest.fixture(scope="session")
def c_sol10(hard10):
    return solve_c_min(hard10)


@pytest.fixture(scope="session")
def rng_factory():
    return lambda seed: np.random.default_rng(seed)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
