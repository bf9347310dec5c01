import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


CRITERIA = []


@pytest.fixture
def criterion(capsys):
    """Record and print one PASS/FAIL line, then fail the test if needed."""

    def report(number, ok, detail, elapsed=None, limit=None):
        in_time = limit is None or elapsed is None or elapsed < limit
        status = "PASS" if ok and in_time else "FAIL"
        timing = "" if elapsed is None else f" [{elapsed:.1f}s / limit {limit:.0f}s]"
        line = f"CRITERION {number:2d}: {status} - {detail}{timing}"
        CRITERIA.append((number, line))
        with capsys.disabled():
            print("\n" + line)
        assert ok, line
        assert in_time, line

    return report


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(CRITERIA):
            terminalreporter.write_line(line)
