import pytest

_CRITERIA = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line; printed in the terminal summary."""
    def record(number, ok, detail):
        _CRITERIA.append((number, bool(ok), detail))
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(_CRITERIA, key=lambda c: c[0]):
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
