import pytest

_verdicts = {}


@pytest.fixture
def criterion(request):
    """Record a one-line verdict for an acceptance criterion.

    Call it with the criterion number at the start of the test, and again
    with measured details as they become known.  PASS/FAIL comes from the
    test outcome.
    """
    def record(number, detail=""):
        _verdicts[request.node.nodeid] = {"number": number, "detail": detail, "passed": False}

    return record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    entry = _verdicts.get(item.nodeid)
    if entry is not None and report.when == "call":
        entry["passed"] = report.passed


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for e in sorted(_verdicts.values(), key=lambda e: e["number"]):
        status = "PASS" if e["passed"] else "FAIL"
        terminalreporter.write_line(f"criterion {e['number']:>2}: {status}  {e['detail']}")
