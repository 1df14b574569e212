import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

from nls6.grids import RadialGrid, TensorGrid  # noqa: E402
from nls6.ground_state import ground_state_closed_form  # noqa: E402

settings.register_profile("repo", max_examples=30, deadline=None, derandomize=True)
settings.load_profile("repo")

from acceptance_log import RESULTS  # noqa: E402


@pytest.fixture(scope="session")
def fine_grid():
    return RadialGrid(2 ** 14, 400.0)


@pytest.fixture(scope="session")
def run_grid():
    return RadialGrid(4096, 400.0)


@pytest.fixture(scope="session")
def gs_half(run_grid):
    return ground_state_closed_form(0.5, run_grid)


@pytest.fixture(scope="session")
def gs_one_fine(fine_grid):
    return ground_state_closed_form(1.0, fine_grid)


@pytest.fixture(scope="session")
def tgrid1():
    return TensorGrid(1, 2 * np.pi * 8, 256)


@pytest.fixture(scope="session")
def tgrid2():
    return TensorGrid(2, 20.0, 64)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(RESULTS):
        ok, name, detail = RESULTS[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {name}  [{detail}]")
