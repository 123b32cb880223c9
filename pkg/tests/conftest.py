"""Shared test plumbing: collect acceptance-criterion verdict lines and echo
them in the terminal summary so they are visible without -s."""

import pytest

_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def criterion_report():
    def _report(line: str) -> None:
        _ACCEPTANCE_LINES.append(line)
        print(line)
    return _report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
