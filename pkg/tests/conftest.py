import pytest

from lugre_lab.model import TABLE1_FRICTION, TABLE1_PLANT

ACCEPTANCE_LINES = []


@pytest.fixture
def p():
    return TABLE1_FRICTION


@pytest.fixture
def jp():
    return TABLE1_PLANT


@pytest.fixture
def criterion_line():
    """Record a one-line verdict that is echoed in the terminal summary."""
    def record(label, passed, detail):
        line = f"{label}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
