import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    entry = _criteria.setdefault(number, {"title": title, "ok": True, "detail": ""})
    if report.failed:
        entry["ok"] = False
        entry["detail"] = str(report.longrepr.reprcrash.message) if hasattr(report.longrepr, "reprcrash") else "error"
    elif report.when == "call" and report.skipped:
        entry["ok"] = False
        entry["detail"] = "skipped"
    if report.when == "call":
        detail = getattr(item, "acceptance_detail", "")
        if detail and entry["ok"]:
            entry["detail"] = f"{entry['detail']}; {detail}" if entry["detail"] else detail


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        status = "PASS" if entry["ok"] else "FAIL"
        line = f"criterion {number} [{status}] {entry['title']}"
        if entry["detail"]:
            line += f": {entry['detail']}"
        terminalreporter.write_line(line)
