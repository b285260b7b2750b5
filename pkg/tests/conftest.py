import numpy as np
import pytest

from polypack import build_root_system, builtin_packing, configuration_from_circles
from polypack.inversive import circle_from_center_radius
from polypack.polyhedron import builtin_graph

_CRITERIA: dict[int, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_logreport(report):
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    number, title = marker
    entry = _CRITERIA.setdefault(number, [title, True])
    if report.failed or (report.when == "call" and report.skipped):
        entry[1] = False


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        rep.criterion = tuple(m.args)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {title}")


@pytest.fixture(scope="session")
def packings():
    cache = {}

    def get(name):
        if name not in cache:
            cfg = builtin_packing(name)
            cache[name] = (cfg, build_root_system(cfg))
        return cache[name]

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def quadruple():
    """Tetrahedral configuration with curvatures (-1, 2, 2, 3) inside the unit circle."""
    C = np.column_stack(
        [
            circle_from_center_radius((0, 0), 1.0, "outward").vector,
            circle_from_center_radius((0.5, 0), 0.5).vector,
            circle_from_center_radius((-0.5, 0), 0.5).vector,
            circle_from_center_radius((0, 2 / 3), 1 / 3).vector,
        ]
    )
    return configuration_from_circles(builtin_graph("tetrahedron"), C)
