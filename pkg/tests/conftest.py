"""Shared pytest plumbing: the acceptance battery records one summary line
per criterion and the terminal hook prints them after the run."""

import pytest

_ACCEPT_LINES = {}


@pytest.fixture(scope="session")
def accept():
    """Record "[ACCEPT NN] description: PASS/FAIL" and return the verdict."""

    def record(num: int, desc: str, passed: bool, note: str = "") -> bool:
        status = "PASS" if passed else "FAIL"
        extra = f" ({note})" if note else ""
        _ACCEPT_LINES[num] = f"[ACCEPT {num:02d}] {desc}: {status}{extra}"
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPT_LINES:
        return
    terminalreporter.section("acceptance summary")
    for num in sorted(_ACCEPT_LINES):
        terminalreporter.write_line(_ACCEPT_LINES[num])
