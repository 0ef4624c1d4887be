"""Shared fixtures; also echoes the acceptance verdict lines at the end of the run."""
import pytest

from ceramsim import matmodel as mm

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def params():
    return mm.MaterialParams()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
