"""Collects one pass/fail line per acceptance criterion and prints them at the end of the run."""
import re

import pytest

_LINES: dict[str, str] = {}


@pytest.fixture
def criterion():
    def record(key: str, ok: bool, detail: str) -> bool:
        line = f"criterion {key}: {'PASS' if ok else 'FAIL'} - {detail}"
        _LINES[key] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_LINES, key=lambda k: (int(re.match(r"\d+", k).group()), k)):
        terminalreporter.write_line(_LINES[key])
