"""Shared test plumbing: the acceptance verdict channel.

Acceptance tests emit one PASS/FAIL line each through the ``verdict``
fixture; the lines are replayed in the terminal summary so they survive
output capture.
"""

import pytest

_lines: list[str] = []


@pytest.fixture
def verdict():
    def emit(num: int, ok: bool, detail: str) -> None:
        _lines.append(f"[criterion {num:02d}] {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail

    return emit


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _lines:
        terminalreporter.section("acceptance criteria")
        for line in _lines:
            terminalreporter.write_line(line)
