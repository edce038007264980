import pytest

ACCEPTANCE_LINES: dict = {}


def record_acceptance(number: int, passed: bool, detail: str) -> str:
    line = f"CRITERION {number}: {'PASS' if passed else 'FAIL'} | {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return line


@pytest.fixture
def acceptance():
    return record_acceptance


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
