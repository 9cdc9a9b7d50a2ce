import os

import pytest

_results: dict[str, str] = {}


def pytest_collection_modifyitems(config, items):
    if os.environ.get("PIGNN_FULL"):
        return
    skip = pytest.mark.skip(reason="full-scale run; set PIGNN_FULL=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    label = getattr(item.function, "criterion", None)
    if label is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        _results[f"{label} [{item.callspec.id}]" if hasattr(item, "callspec") else label] = status


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_results):
        terminalreporter.write_line(f"{_results[label]:4}  {label}")
