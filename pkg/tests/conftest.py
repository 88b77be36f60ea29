"""Collects one pass/fail line per acceptance criterion and prints them at the end of the run."""

import pytest

_CRITERIA: dict[int, tuple[str, str, float]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when != "call":
        return
    number, title = marker.args
    status = "PASS" if rep.passed else "FAIL"
    _CRITERIA[number] = (title, status, rep.duration)
    print(f"\ncriterion {number:2d} [{status}] {title} ({rep.duration:.2f} s)")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, status, seconds = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d} [{status}] {title} ({seconds:.2f} s)")
