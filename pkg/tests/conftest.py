import numpy as np
import pytest

from levyfwd import scenarios as sc
from levyfwd.levy_driver import NigParams
from levyfwd.model_core import VolStructure, assemble_model


@pytest.fixture(scope="session")
def grid():
    return sc.synthetic_grid()


@pytest.fixture(scope="session")
def curves(grid):
    return sc.synthetic_curves(grid)


@pytest.fixture(scope="session")
def model_a(grid, curves):
    return sc.reference_model(sc.REF_A, grid, curves)


@pytest.fixture(scope="session")
def model_b(grid, curves):
    return sc.reference_model(sc.REF_B, grid, curves)


def zero_vol_model(grid, curves, variant="A"):
    p = NigParams(2.0, 0.5, 1.0, em_bound_M=1.2, em_eps=0.1)
    vol = VolStructure(-1.0, 0.0, 0.0, 0.0, variant)
    return assemble_model(p, vol, grid, curves, "6m")


@pytest.fixture(scope="session")
def zero_a(grid, curves):
    return zero_vol_model(grid, curves, "A")


@pytest.fixture(scope="session")
def zero_b(grid, curves):
    return zero_vol_model(grid, curves, "B")


@pytest.fixture
def rng():
    return np.random.default_rng(20161015)


# -- acceptance summary -------------------------------------------------------

ACCEPTANCE = []


@pytest.fixture
def acceptance():
    """Record one criterion's outcome; the lines are echoed in the terminal summary."""

    def record(number, name, passed, detail=""):
        line = "criterion %2d %-4s %s: %s" % (number, "PASS" if passed else "FAIL", name, detail)
        ACCEPTANCE.append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
