import math

import numpy as np
import pytest

_acceptance = []


def sort_oracle(values, q):
    """Lower q-quantile by sorting a copy; independent of the library oracle."""
    s = sorted(values)
    return s[int(math.floor(1 + q * (len(s) - 1))) - 1]


def within(estimate, exact, alpha, slack=1e-9):
    return abs(estimate - exact) <= alpha * abs(exact) * (1 + slack)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome, report.user_properties))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, props in _acceptance:
        mark = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{mark}  {name}")
        for key, value in props:
            terminalreporter.write_line(f"        {key}: {value}")
