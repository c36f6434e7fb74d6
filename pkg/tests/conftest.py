from __future__ import annotations

import pytest

_LINES: list[str] = []


class Recorder:
    def __call__(self, criterion: str, ok: bool, seconds: float, limit: float | None = None, note: str = "") -> None:
        budget = "" if limit is None else f" (limit {limit:g} s)"
        extra = f"; {note}" if note else ""
        line = f"[{'PASS' if ok else 'FAIL'}] {criterion}: {seconds:.2f} s{budget}{extra}"
        _LINES.append(line)
        print(line)


@pytest.fixture
def acceptance() -> Recorder:
    return Recorder()


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
