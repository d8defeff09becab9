"""Shared pytest plumbing: the acceptance-criterion reporting hook.

Each acceptance test records one "criterion N: PASS/FAIL" line through the
criterion_report fixture; the lines are echoed in a dedicated section of the
terminal summary so the verdicts are visible even for passing tests.
"""

import pytest

_lines: list[str] = []


@pytest.fixture
def criterion_report():
    def record(num: int, ok: bool, detail: str) -> None:
        line = f"criterion {num:2d}: {'PASS' if ok else 'FAIL'} - {detail}"
        _lines.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in _lines:
        terminalreporter.write_line(line)
