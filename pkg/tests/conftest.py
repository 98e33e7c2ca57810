import re

import pytest

_CRITERIA = {}


def pytest_addoption(parser):
    parser.addoption("--large", action="store_true", default=False,
                     help="also run hour-scale acceptance checks")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--large"):
        return
    skip = pytest.mark.skip(reason="hour-scale; pass --large to run")
    for item in items:
        if "large" in item.keywords:
            item.add_marker(skip)


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    key = props["criterion"]
    status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
    prev = _CRITERIA.get(key)
    if prev is None or prev[0] == "PASS":
        _CRITERIA[key] = (status, props.get("title", ""), props.get("detail", ""))


@pytest.hookimpl(tryfirst=True)
def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is not None and call.when in ("setup", "call"):
        n, title = marker.args
        have = {k for k, _ in item.user_properties}
        if "criterion" not in have:
            item.user_properties.append(("criterion", n))
            item.user_properties.append(("title", title))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    def order(key):
        m = re.match(r"\d+", str(key))
        return (int(m.group()) if m else 0, str(key))

    for key in sorted(_CRITERIA, key=order):
        status, title, detail = _CRITERIA[key]
        line = f"[{status}] {key}. {title}"
        if detail:
            line += f" :: {detail}"
        tr.write_line(line)
