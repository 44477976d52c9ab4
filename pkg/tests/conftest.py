"""Per-criterion PASS/FAIL roll-up for the acceptance suite."""

from collections import OrderedDict

import pytest

_RESULTS: "OrderedDict[str, dict]" = OrderedDict()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(id, title): acceptance criterion a test belongs to")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            cid, title = mark.args
            _RESULTS.setdefault(cid, {"title": title, "passed": [], "failed": [], "skipped": []})


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    entry = _RESULTS[mark.args[0]]
    name = item.name.split("::")[-1]
    if report.when == "call":
        entry["passed" if report.passed else "skipped" if report.skipped else "failed"].append(name)
    elif report.failed:
        entry["failed"].append(f"{name} ({report.when})")
    elif report.skipped and report.when == "setup":
        entry["skipped"].append(name)


def pytest_terminal_summary(terminalreporter):
    ran = {k: v for k, v in _RESULTS.items() if v["passed"] or v["failed"] or v["skipped"]}
    if not ran:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for cid, v in ran.items():
        if v["failed"]:
            status = "FAIL"
        elif v["passed"]:
            status = "PASS"
        else:
            status = "SKIP"
        detail = f" [failed: {', '.join(v['failed'])}]" if v["failed"] else ""
        tr.write_line(f"{status} {cid}: {v['title']}{detail}")
