from __future__ import annotations

import pytest

from hostile_strip.phase_plane import critical_half_width

ALPHA = 0.25

# lines appended by the acceptance suite, echoed after the run
ACCEPTANCE_REPORT: list[str] = []


@pytest.fixture(scope="session")
def alpha() -> float:
    return ALPHA


@pytest.fixture(scope="session")
def lstar() -> float:
    return critical_half_width(ALPHA)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_REPORT:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_REPORT, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
