import pytest

# One line per acceptance criterion, printed in the terminal summary.
CRITERIA_REPORT = []


def record(criterion, passed, detail=""):
    line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}".rstrip()
    CRITERIA_REPORT.append(line)
    print(line)
    return passed


@pytest.fixture
def report():
    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERIA_REPORT:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA_REPORT:
            terminalreporter.write_line(line)
