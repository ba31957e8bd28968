import numpy as np
import pytest

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion reported in the summary")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def detail(request):
    """Dict a criterion test fills with the measured values it reports."""
    store = {}
    request.node.criterion_detail = store
    return store


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        info = getattr(item, "criterion_detail", {})
        text = ", ".join(f"{k}={_fmt(v)}" for k, v in info.items())
        _CRITERIA[number] = f"{status} criterion {number:>2}: {title}" + (f" [{text}]" if text else "")
        print(f"\n{_CRITERIA[number]}")


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_CRITERIA):
        terminalreporter.write_line(_CRITERIA[number])
