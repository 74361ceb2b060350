import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_RESULTS: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


def pytest_runtest_logreport(report):
    marker = getattr(report, "_criterion", None)
    if marker is None:
        return
    num, title = marker
    entry = _RESULTS.setdefault(num, {"title": title, "ok": True, "tests": []})
    if report.when == "call" or report.outcome != "passed":
        entry["tests"].append((report.nodeid.split("::")[-1], report.outcome))
        if report.outcome != "passed":
            entry["ok"] = False


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        report._criterion = (m.args[0], m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(_RESULTS):
        entry = _RESULTS[num]
        tr.write_line(f"[{'PASS' if entry['ok'] else 'FAIL'}] criterion {num}: {entry['title']}")
        for name, outcome in entry["tests"]:
            if outcome != "passed":
                tr.write_line(f"         {outcome}: {name}")
