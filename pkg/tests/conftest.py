import pytest


def pytest_configure(config):
    config._acceptance = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line: ``criterion(number, title, passed, detail)``."""
    def record(number, title, passed, detail):
        request.config._acceptance.append((number, title, bool(passed), detail))
        return passed
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = sorted(config._acceptance)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in lines:
        terminalreporter.write_line(
            f"[{'PASS' if passed else 'FAIL'}] {number:>2}. {title}: {detail}")
