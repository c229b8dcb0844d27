import pytest

# (criterion, passed, detail) tuples collected by the acceptance suite
ACCEPTANCE_RESULTS = []


@pytest.fixture
def acceptance_record():
    def record(criterion, passed, detail):
        ACCEPTANCE_RESULTS.append((criterion, bool(passed), detail))
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} {criterion}: {detail}")
