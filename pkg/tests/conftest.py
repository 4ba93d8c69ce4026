import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ballspace.grid import GridFunction, make_grid

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def unit1():
    return make_grid(1, [(0, 1)], 6)


@pytest.fixture
def line():
    return make_grid(1, [(-4, 4)], 8)


@pytest.fixture
def plane():
    return make_grid(2, [(-2, 2), (-2, 2)], 4)


def random_function(grid, seed=0, signed=False, support=None):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(grid.shape) if signed else rng.random(grid.shape)
    if support is not None:
        v = v * (grid.radius() < support)
    return GridFunction(grid, v)


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
