import numpy as np
import pytest

from dpfs.gaussian_model import GmParams, PrivacyBudget


@pytest.fixture
def example1():
    """Two features: means [0,0] / [5,10], variances (1, 10)."""
    return GmParams(np.array([[0.0, 0.0], [5.0, 10.0]]), np.array([1.0, 10.0]))


@pytest.fixture
def budget():
    return PrivacyBudget(epsilon=1.0, delta=1e-4)


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_report():
    """Record one pass/fail line per acceptance criterion, then assert it."""

    def report(number: int, passed: bool, detail: str) -> None:
        _ACCEPTANCE_LINES.append(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
        print(_ACCEPTANCE_LINES[-1])
        assert passed, detail

    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
