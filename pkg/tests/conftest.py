"""Collects acceptance-criterion outcomes and prints one line per criterion."""

import pytest

_RESULTS: dict[str, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(cid, title): acceptance criterion check")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call" and not report.failed:
        return
    cid, title = marker.args
    entry = _RESULTS.setdefault(cid, {"title": title, "ok": True, "notes": []})
    if report.failed or hasattr(report, "wasxfail"):
        entry["ok"] = False
        entry["notes"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_RESULTS, key=lambda c: int(c[1:])):
        entry = _RESULTS[cid]
        status = "PASS" if entry["ok"] else "FAIL"
        line = f"{status} {cid} {entry['title']}"
        if entry["notes"]:
            line += f"  (failing: {', '.join(entry['notes'])})"
        terminalreporter.write_line(line)
