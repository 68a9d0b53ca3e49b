import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def rel_close(a, b, rtol, atol=0.0):
    return abs(a - b) <= max(rtol * max(abs(a), abs(b)), atol)


_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """report(number, ok, detail): print a PASS/FAIL line and fail the test if not ok."""

    def report(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
