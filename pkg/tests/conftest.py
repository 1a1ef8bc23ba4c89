import pytest

from agehopf.model import validate

BENCH_RAW = {
    "Lambda": 1.2,
    "mu": 0.2,
    "K": 200.0,
    "alpha": 2.35,
    "m": 1.66,
    "sigma": 0.5,
    "eta": 1.0,
}

CRITERIA = {
    1: "critical frequency omega0",
    2: "critical delay tau0",
    3: "equilibria",
    4: "assumption margins",
    5: "stability regimes",
    6: "cross-solver oracle",
    7: "identity suite",
    8: "period scale",
    9: "sensitivity trends",
}

_outcomes: dict[int, list[tuple[str, str]]] = {}


@pytest.fixture
def bench():
    return validate(BENCH_RAW)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _outcomes.setdefault(mark.args[0], []).append((item.name, rep.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n, title in CRITERIA.items():
        results = _outcomes.get(n)
        if not results:
            tr.write_line(f"criterion {n} ({title}): NOT RUN")
            continue
        ok = all(o == "passed" for _, o in results)
        failed = [name for name, o in results if o != "passed"]
        extra = "" if ok else f"  failing: {', '.join(failed)}"
        tr.write_line(f"criterion {n} ({title}): {'PASS' if ok else 'FAIL'}{extra}")
