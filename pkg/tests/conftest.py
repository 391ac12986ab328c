from collections import defaultdict

_OUTCOMES = defaultdict(list)
_TITLES = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion exercised by a test")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            item.user_properties.append(("criterion", mark.args[0]))
            _TITLES.setdefault(mark.args[0], mark.args[1] if len(mark.args) > 1 else "")


def pytest_runtest_logreport(report):
    crit = dict(report.user_properties).get("criterion")
    if crit is None:
        return
    if report.when == "call" or report.outcome != "passed":
        _OUTCOMES[crit].append((report.nodeid.split("::")[-1], report.outcome == "passed"))


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(_OUTCOMES):
        results = _OUTCOMES[crit]
        ok = all(passed for _, passed in results)
        tr.write_line(f"criterion {crit}: {'PASS' if ok else 'FAIL'}  {_TITLES.get(crit, '')}")
        for name, passed in results:
            if not passed:
                tr.write_line(f"    failed: {name}")
