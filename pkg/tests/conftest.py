from collections import OrderedDict

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

_CRITERIA = OrderedDict()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call" and not report.failed:
        return
    number, title = marker.args
    entry = _CRITERIA.setdefault(number, {"title": title, "passed": 0, "failed": []})
    if report.failed:
        entry["failed"].append(item.name)
    elif report.when == "call":
        entry["passed"] += 1


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        status = "FAIL" if entry["failed"] else "PASS"
        detail = f"{entry['passed']} checks passed"
        if entry["failed"]:
            detail += f", {len(entry['failed'])} failed: " + ", ".join(entry["failed"])
        terminalreporter.write_line(f"[{status}] {number:>2}. {entry['title']} ({detail})")


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)
