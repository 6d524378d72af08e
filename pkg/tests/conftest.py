"""Shared pytest wiring: acceptance-result registry and its summary block."""

import numpy as np
import pytest

# criterion number -> (label, outcome, detail); filled by test_acceptance
ACCEPTANCE_RESULTS = {}


def record_criterion(number, label, passed, detail=""):
    ACCEPTANCE_RESULTS[number] = (label, "PASS" if passed else "FAIL", detail)
    return passed


def record_criterion_skip(number, label, reason):
    ACCEPTANCE_RESULTS[number] = (label, "SKIP", reason)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        label, outcome, detail = ACCEPTANCE_RESULTS[number]
        line = f"criterion {number}: {outcome} - {label}"
        if detail:
            line += f" [{detail}]"
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
