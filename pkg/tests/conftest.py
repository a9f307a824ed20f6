import pytest

RESULTS = {}


@pytest.fixture()
def criterion():
    """Record one acceptance line: ``criterion(n, ok, detail)``; ``ok=None`` means skipped."""
    def record(number, ok, detail=""):
        status = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
        RESULTS[number] = (status, detail)
        print(f"criterion {number}: {status} {detail}")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        status, detail = RESULTS[number]
        terminalreporter.write_line(f"criterion {number}: {status}  {detail}")
