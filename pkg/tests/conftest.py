import pytest

_RESULTS = {}


@pytest.fixture
def criterion():
    """Record an acceptance criterion outcome, then fail the test if it did not pass."""

    def record(number, name, passed, detail=""):
        _RESULTS[number] = (name, bool(passed), detail)
        assert passed, f"criterion {number} ({name}): {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        name, passed, detail = _RESULTS[number]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {number}. {name}: {detail}")
