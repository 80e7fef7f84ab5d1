import pytest


def pytest_configure(config):
    config.acceptance_lines = {}


@pytest.fixture
def criterion(request):
    """Record the outcome of an acceptance criterion; lines are printed in the terminal summary."""
    def record(number, passed, detail):
        request.config.acceptance_lines[number] = f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}"
        print(request.config.acceptance_lines[number])
        return passed
    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.acceptance_lines
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
