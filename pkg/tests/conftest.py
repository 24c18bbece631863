import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, derandomize=True, max_examples=60)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


@pytest.fixture
def rank1_training():
    """T = [[1,0,1],[-1,0,-1]]: rank one, ||T||_F = 2."""
    from expca import TrainingMatrix
    return TrainingMatrix(("A", "B"), np.array([[1.0, 0, 1], [-1, 0, -1]]), ("a", "b", "c"))


ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one acceptance line; printed in the terminal summary."""
    def _report(criterion, passed, detail):
        ACCEPTANCE_LINES.append(f"{'PASS' if passed else 'FAIL'}  criterion {criterion:>2}: {detail}")
        return passed
    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
