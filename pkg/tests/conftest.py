"""Collects acceptance-criterion outcomes and prints one line per criterion."""

import pytest

_OUTCOMES = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number checked by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    n = marker.args[0]
    failed = report.failed or hasattr(report, "wasxfail")
    if report.when == "call" or failed:
        ok = not failed and not report.skipped
        _OUTCOMES.setdefault(n, []).append((item.name, ok))


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_OUTCOMES):
        checks = _OUTCOMES[n]
        status = "PASS" if all(ok for _, ok in checks) else "FAIL"
        bad = [name for name, ok in checks if not ok]
        detail = f"  (failing: {', '.join(bad)})" if bad else ""
        terminalreporter.write_line(f"criterion {n:2d}: {status}{detail}")
