import pytest

_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def criterion(request):
    """Record one summary line per acceptance criterion; the test still asserts."""
    lines = request.config.stash[_ACCEPTANCE]

    def record(number: int, passed: bool, detail: str):
        lines.append((number, f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"))

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash[_ACCEPTANCE]
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(lines):
        terminalreporter.write_line(line)
