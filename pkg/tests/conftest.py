import numpy as np
import pytest

from qchannel.lattice import assemble_hamiltonian, build_grid, diagonalize
from qchannel.model import ChannelParams, k0_from_aspect, params_at_lambda


@pytest.fixture(scope="session")
def channel_16():
    """Strongly scale-separated channel, L/L_omega ~ 15.8, k1 = 0.3."""
    return ChannelParams(k0=k0_from_aspect(15.8), k1=0.3)


@pytest.fixture(scope="session")
def spectrum_16(channel_16):
    """One diagonalization of the 50x41 periodic grid serves every Lambda
    (the Hamiltonian is temperature independent)."""
    p = params_at_lambda(channel_16, 0.02)   # widest thermal spread of the sweep
    grid = build_grid(p, 50, 41, bc_x="periodic")
    eig = diagonalize(assemble_hamiltonian(grid, p))
    return grid, eig
