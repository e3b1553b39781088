"""Shared fixtures and the acceptance summary printed at the end of the session."""
import pytest

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.fixture
def measured(request):
    """Dict for a criterion test to report its measured values in the summary line."""
    values = {}
    request.node.user_properties.append(("measured", values))
    return values


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    entry = _CRITERIA.setdefault(number, {"title": title, "ok": True, "ran": False, "measured": {}})
    if rep.when == "call" or rep.failed:
        entry["ran"] = True
        entry["ok"] = entry["ok"] and not rep.failed
        for key, val in item.user_properties:
            if key == "measured":
                entry["measured"].update(val)


def _fmt(v):
    return f"{v:.3g}" if isinstance(v, float) else str(v)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        e = _CRITERIA[number]
        status = "PASS" if e["ok"] and e["ran"] else "FAIL"
        detail = ", ".join(f"{k}={_fmt(v)}" for k, v in e["measured"].items())
        terminalreporter.write_line(f"{status} criterion {number:>2}: {e['title']}" + (f" [{detail}]" if detail else ""))
