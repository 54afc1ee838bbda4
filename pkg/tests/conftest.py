import numpy as np
import pytest

from graphreorder import build_csr, use_backend
from graphreorder.generators import rmat, uniform_random


@pytest.fixture(params=["numba", "numpy"])
def backend(request):
    with use_backend(request.param):
        yield request.param


def random_graph(seed, n=None, m=None, kind=None, in_edges=True):
    """Mixed RMAT/uniform graph, deterministic in ``seed``."""
    rng = np.random.default_rng(seed)
    kind = kind or ("rmat" if rng.random() < 0.5 else "uniform")
    if kind == "rmat":
        scale = int(rng.integers(1, 9)) if n is None else max(0, int(np.log2(max(n, 1))))
        edges = rmat(scale, int(rng.integers(1, 9)), seed=seed)
    else:
        n = int(rng.integers(1, 300)) if n is None else n
        m = int(rng.integers(0, 4 * n + 1)) if m is None else m
        edges = uniform_random(n, m, seed=seed)
    return build_csr(edges, build_in_edges=in_edges)


def edge_pairs(g):
    return list(zip(g.edge_sources().tolist(), g.out_neighbors.tolist()))


# -- acceptance reporting ------------------------------------------------------

_ACCEPTANCE: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _ACCEPTANCE[number] = (title, report.passed, report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, passed, duration = _ACCEPTANCE[number]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {status}  {title}  ({duration:.1f}s)")
