import pytest

_VERDICTS: dict = {}


@pytest.fixture
def verdict():
    """Record one acceptance line: verdict(n, ok, detail)."""
    def record(n: int, ok: bool, detail: str):
        _VERDICTS[n] = (ok, detail)
        print(f"criterion {n}: {'PASS' if ok else 'FAIL'} ({detail})")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_VERDICTS):
        ok, detail = _VERDICTS[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} ({detail})")
