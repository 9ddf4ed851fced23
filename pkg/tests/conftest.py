import re

import pytest

_acceptance_lines = []


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(number, title, passed, detail)``."""

    def record(number, title, passed, detail=""):
        line = f"[{'PASS' if passed else 'FAIL'}] {str(number):>3}. {title}: {detail}"
        _acceptance_lines.append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_lines:
        return
    terminalreporter.section("acceptance criteria")

    def order(item):
        num, suffix = re.match(r"(\d+)(.*)", str(item[0])).groups()
        return int(num), suffix

    for _, line in sorted(_acceptance_lines, key=order):
        terminalreporter.write_line(line)
