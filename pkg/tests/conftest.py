import math
import os

import numpy as np
import pytest

from gridintent import RunParams, load_scenario, parse_map, precompute

DATA_DIR = os.path.join(
    os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
    "src", "gridintent", "data",
)
WAREHOUSE_MAP = os.path.join(DATA_DIR, "maps", "warehouse.map")
DEMO_SCENARIO = os.path.join(DATA_DIR, "scenarios", "veer_demo.json")


# ---------- tiny fixture maps ----------

@pytest.fixture(scope="session")
def corridor3():
    """1-high corridor of 3 cells, goal at the east end."""
    return parse_map("..1\n")


@pytest.fixture(scope="session")
def corridor5():
    """1-high corridor of 5 cells, goal at the east end."""
    return parse_map("....1\n")


@pytest.fixture(scope="session")
def open4():
    """Empty 4x4 map with one goal."""
    return parse_map("....\n....\n....\n...1\n")


@pytest.fixture(scope="session")
def detour6():
    """6x6 map with a 2x2 block in the middle: two equal-length ways around.

    Start (1,1) and goal (4,4) sit on opposite corners of the block, so the
    L-shaped path over the top/right and the one under the left/bottom tie
    on step count and only visibility separates them.
    """
    text = (
        "......\n"
        "......\n"
        "..##..\n"
        "..##..\n"
        "......\n"
        ".....1\n"
    )
    grid = parse_map(text)
    assert grid.is_free(1, 1) and grid.is_free(4, 4)
    return grid


@pytest.fixture(scope="session")
def default_params():
    return RunParams()


# ---------- the shipped warehouse fixture ----------

@pytest.fixture(scope="session")
def warehouse():
    scenario, grid = load_scenario(DEMO_SCENARIO)
    return scenario, grid


@pytest.fixture(scope="session")
def warehouse_grid(warehouse):
    return warehouse[1]


@pytest.fixture(scope="session")
def warehouse_scenario(warehouse):
    return warehouse[0]


@pytest.fixture(scope="session")
def warehouse_tables(warehouse_grid, default_params):
    """Precomputed tables for the shipped map (shared; ~2 s once)."""
    return precompute(warehouse_grid, default_params)


# ---------- misc ----------

@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance: end-to-end acceptance criteria"
    )


#: One verdict line per acceptance criterion, echoed after the run (plain
#: prints disappear into pytest's capture when the tests pass).
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


FOV_THIRD = math.pi / 3.0
