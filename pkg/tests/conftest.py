import warnings

import pytest

from nprgflow.observables import NearCriticalWarning


@pytest.fixture(autouse=True)
def _quiet_near_critical():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NearCriticalWarning)
        yield


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
