import numpy as np
import pytest

from gehole.hamiltonian import DotGeometry, FieldConfig, MaterialParams, basis_for
from gehole.spectrum import solve_working_point

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def params():
    return MaterialParams()


@pytest.fixture(scope="session")
def geometry():
    return DotGeometry()


@pytest.fixture(scope="session")
def small_basis(geometry):
    return basis_for(geometry, 6, 6, 4)


@pytest.fixture(scope="session")
def small_wp(params, geometry, small_basis):
    return solve_working_point(params, geometry, FieldConfig(), small_basis, gap_factor=None)


@pytest.fixture(scope="session")
def medium_wp(params, geometry):
    # enough x levels for the translation sum rule to hold
    return solve_working_point(params, geometry, FieldConfig(), basis_for(geometry, 12, 6, 6))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
