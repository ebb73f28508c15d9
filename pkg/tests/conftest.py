import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from grwflow import FiberGrid, WarpingFactor

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def gaussian():
    return WarpingFactor.gaussian(-1.0, 3.0, 1.0)


@pytest.fixture
def de_sitter():
    return WarpingFactor("de_sitter", -1.0, 1.0, (1.0,))


@pytest.fixture
def product():
    return WarpingFactor.product(0.0, 2.0, 1.5)


def bump_torus2(grid, base=0.5, amp=0.2):
    return base + amp * np.sin(grid.coords[0]) * np.sin(grid.coords[1])


def bump_torus1(grid, base=0.5, amp=0.2):
    return base + amp * np.sin(grid.coords[0])


def bump_sphere(grid, base=0.2, amp=0.1):
    return base + amp * np.cos(grid.coords[0]) ** 2


@pytest.fixture(params=["torus1", "torus2", "sphere2_axisym"])
def any_grid(request):
    return FiberGrid(request.param, 32)


def bump(grid, base=0.5, amp=0.2):
    return {"torus1": bump_torus1, "torus2": bump_torus2,
            "sphere2_axisym": bump_sphere}[grid.kind](grid, base, amp)
