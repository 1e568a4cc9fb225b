import pytest

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: dict = {}


def record(criterion: int, ok: bool, detail: str):
    line = f"{'PASS' if ok else 'FAIL'}  criterion {criterion}: {detail}"
    ACCEPTANCE_LINES[criterion] = line
    print(line)
    return ok


@pytest.fixture
def acceptance():
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
