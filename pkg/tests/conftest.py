"""Collects acceptance-criterion outcomes and prints one summary line per criterion."""

from collections import OrderedDict

_RESULTS: "OrderedDict[int, list[bool]]" = OrderedDict()
_TITLES: dict[int, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion a test belongs to")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark:
            number, title = mark.args
            item.user_properties.append(("criterion", number))
            _TITLES[number] = title
            _RESULTS.setdefault(number, [])


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _RESULTS[props["criterion"]].append(report.passed)


def pytest_terminal_summary(terminalreporter):
    ran = {k: v for k, v in _RESULTS.items() if v}
    if not ran:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ran):
        outcomes = ran[number]
        status = "PASS" if all(outcomes) else "FAIL"
        detail = f"{sum(outcomes)}/{len(outcomes)} checks"
        terminalreporter.write_line(f"criterion {number:>2}: {status}  {_TITLES[number]} ({detail})")
