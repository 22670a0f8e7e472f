"""Shared fixtures: ground states and mode bases are expensive, solve once."""

import pytest

from becstrobe.meanfield import Grid, TrapConfig, solve_gpe_ground_state
from becstrobe.bogoliubov import solve_bdg
from becstrobe.optics import build_coupling


@pytest.fixture(scope="session")
def gs_noninteracting():
    return solve_gpe_ground_state(TrapConfig(n_atoms=1000.0, g1d=0.0))


@pytest.fixture(scope="session")
def gs_mu2():
    return solve_gpe_ground_state(TrapConfig(n_atoms=1000.0, mu_target=2.0))


@pytest.fixture(scope="session")
def gs_mu20():
    return solve_gpe_ground_state(TrapConfig(n_atoms=1000.0, mu_target=20.0))


@pytest.fixture(scope="session")
def basis_mu2(gs_mu2):
    return solve_bdg(gs_mu2, n_modes=10)


@pytest.fixture(scope="session")
def basis_noninteracting(gs_noninteracting):
    return solve_bdg(gs_noninteracting, n_modes=10)


@pytest.fixture(scope="session")
def coupling_mu2(basis_mu2):
    return build_coupling(basis_mu2, kappa_sq=100.0)


@pytest.fixture(scope="session")
def system_mu2(gs_mu2, basis_mu2, coupling_mu2):
    # matches the default-scenario trap/grid/detector, so scenario runs
    # can skip the ground-state and mode solves
    return gs_mu2, basis_mu2, coupling_mu2
