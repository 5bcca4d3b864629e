import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA: dict[int, tuple[bool, str, str]] = {}


@pytest.fixture
def criterion():
    """Records the outcome of one acceptance criterion for the terminal summary."""

    def record(number: int, title: str, ok: bool, detail: str = "") -> bool:
        _CRITERIA[number] = (bool(ok), title, detail)
        print(f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        ok, title, detail = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'} - {title} ({detail})")
