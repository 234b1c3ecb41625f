import warnings

import pytest

from spacetime_wf.propagators import CFLWarning

ACCEPTANCE_LINES = []


@pytest.fixture
def record():
    """Append one 'criterion N: PASS/FAIL ...' line to the session summary."""

    def add(number, passed, detail):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append((number, line))
        print(line)

    return add


@pytest.fixture(autouse=True)
def _quiet_cfl():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CFLWarning)
        yield


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
