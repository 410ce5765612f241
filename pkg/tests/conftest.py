import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one summary line per acceptance criterion, pass or fail."""

    def record(number, title, passed, detail, elapsed, limit):
        passed = bool(passed) and elapsed < limit
        status = "PASS" if passed else "FAIL"
        ACCEPTANCE_LINES.append(
            (number, f"[{status}] criterion {number:>2} {title}: {detail} ({elapsed:.3f} s, limit {limit:g} s)"))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
