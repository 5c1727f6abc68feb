import pytest

_CRITERIA = {}


@pytest.fixture
def record():
    """``record(number, part, ok, detail="")`` files one part of an acceptance criterion."""

    def _record(number, part, ok, detail=""):
        _CRITERIA.setdefault(number, []).append((part, bool(ok), detail))
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        parts = _CRITERIA[number]
        status = "PASS" if all(ok for _, ok, _ in parts) else "FAIL"
        detail = "; ".join(f"{p}={'ok' if ok else 'FAILED'}{' (' + d + ')' if d else ''}" for p, ok, d in parts)
        tr.write_line(f"criterion {number:2d}: {status}  {detail}")
