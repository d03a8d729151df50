import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gemd.graph import from_edges

settings.register_profile("gemd", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("gemd")


def random_graph(rng, n, density=0.3, directed=False, weighted=False, loops=False):
    """Seeded Erdos-Renyi style graph; may contain dangling nodes when directed."""
    mask = rng.random((n, n)) < density
    if not loops:
        np.fill_diagonal(mask, False)
    if not directed:
        mask = np.triu(mask)
    src, dst = np.nonzero(mask)
    w = rng.uniform(0.5, 2.0, len(src)) if weighted else None
    return from_edges(src, dst, w, n=n, directed=directed)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        yield


_ACCEPTANCE = {}


@pytest.fixture
def verdict():
    """``verdict(n, ok, detail)`` records and prints one criterion line, then asserts."""
    def record(number, ok, detail):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE[number] = line
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for number in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[number])
