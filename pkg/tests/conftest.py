import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

# criterion number -> [description, passed]
_CRITERIA = {}


def pytest_collection_modifyitems(items):
    for item in items:
        marker = item.get_closest_marker("criterion")
        if marker is not None:
            item.user_properties.append(("criterion", marker.args))


def pytest_runtest_logreport(report):
    for key, (num, desc) in (p for p in report.user_properties if p[0] == "criterion"):
        entry = _CRITERIA.setdefault(num, [desc, True])
        if report.failed or report.skipped:
            entry[1] = False


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        desc, ok = _CRITERIA[num]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {num:2d}: {desc}")
