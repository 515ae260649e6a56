import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion():
    """``criterion(n, ok, detail)`` records an acceptance result and returns ``ok``."""
    def record(n: int, ok: bool, detail: str) -> bool:
        _CRITERIA[n] = (bool(ok), detail)
        print(f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok, detail = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
