import math

import numpy as np
import pytest

from qchannel import fickjacobs as fj
from qchannel.lattice import (assemble_hamiltonian, build_grid, chain_hamiltonian,
                              diagonalize)
from qchannel.model import ChannelParams, params_at_lambda
from qchannel.thermal import (MarginalDensity, edge_row_fraction,
                              mismatch_score, numeric_barrier, thermal_marginal,
                              thermal_weights)


def test_weights_underflow_safe():
    w = thermal_weights(np.array([0.0, 1.0, 2.0]), beta=1e6)
    assert np.all(np.isfinite(w))
    assert w.sum() == pytest.approx(1.0)
    assert w[0] == pytest.approx(1.0)


def test_marginal_flat_channel_uniform():
    p = ChannelParams(k0=80.0, k1=0.0, beta=0.1)
    grid = build_grid(p, 12, 15)
    eig = diagonalize(assemble_hamiltonian(grid, p))
    m = thermal_marginal(eig, p.beta, grid)
    assert np.ptp(m.rho) < 1e-10 * m.rho.mean()


def test_marginal_normalized_to_one_particle():
    p = ChannelParams(k0=80.0, k1=0.4, beta=0.15)
    grid = build_grid(p, 9, 11)
    eig = diagonalize(assemble_hamiltonian(grid, p))
    m = thermal_marginal(eig, p.beta, grid)
    assert m.norm == pytest.approx(1.0, abs=1e-12)
    assert np.all(m.rho >= 0)


def test_numeric_barrier_on_analytic_profile():
    p = ChannelParams(k0=1.0, k1=0.3)
    x = np.linspace(0.0, 1.0, 201)
    rho = fj.equilibrium_density(p, 0.0, x)
    m = MarginalDensity(x=x, rho=rho, dx=x[1] - x[0])
    est = numeric_barrier(m, L=1.0)
    assert est.value == pytest.approx(0.5 * math.log(1.3 / 0.7), abs=1e-12)
    assert x[est.i_max] == pytest.approx(0.5)


def test_numeric_barrier_flat_zero():
    m = MarginalDensity(x=np.linspace(0, 1, 11), rho=np.ones(11), dx=0.1)
    assert numeric_barrier(m).value == 0.0


def test_numeric_barrier_warns_off_symmetry():
    x = np.linspace(0, 1, 101)
    rho = 1.0 + 0.5 * np.sin(2 * np.pi * x)   # extrema at x = 1/4, 3/4
    m = MarginalDensity(x=x, rho=rho, dx=x[1] - x[0])
    with pytest.warns(UserWarning, match="symmetry"):
        est = numeric_barrier(m, L=1.0)
    assert est.off_symmetry


def test_numeric_barrier_rejects_nonpositive():
    m = MarginalDensity(x=np.linspace(0, 1, 5), rho=np.array([1, 2, 0, 2, 1.0]),
                        dx=0.25)
    with pytest.raises(ValueError):
        numeric_barrier(m)


def test_mismatch_trivial_cases():
    b = np.full(50, 2.0)
    dx = 1.0 / 50
    assert mismatch_score(b, b, dx) == 0.0
    assert mismatch_score(1.1 * b, b, dx) == pytest.approx(0.01, rel=1e-12)
    with pytest.raises(ValueError):
        mismatch_score(b[:-1], b, dx)
    with pytest.raises(ValueError):
        mismatch_score(b, 0.0 * b, dx)


def test_edge_row_fraction_small_on_wide_box():
    p = ChannelParams(k0=80.0, k1=0.3, beta=0.2)
    grid = build_grid(p, 8, 21)
    eig = diagonalize(assemble_hamiltonian(grid, p))
    assert edge_row_fraction(eig, p.beta, grid) < 1e-6


# ---------------------------------------------------------------------------
# cross-route physics on the scale-separated channel (one shared spectrum)


def test_thermal_matches_effective_1d_density(channel_16, spectrum_16):
    grid, eig = spectrum_16
    lam = 0.05
    p = params_at_lambda(channel_16, lam)
    m = thermal_marginal(eig, p.beta, grid)
    rho_fj = fj.equilibrium_density(p, lam, grid.x)
    rho_fj = rho_fj / (rho_fj.sum() * grid.dx)
    assert mismatch_score(rho_fj, m.rho, grid.dx) < 0.01


def test_thermal_barrier_antitunneling_sign(channel_16, spectrum_16):
    grid, eig = spectrum_16
    classical = fj.free_energy_barrier(channel_16, 0.0)
    p = params_at_lambda(channel_16, 0.05)
    est = numeric_barrier(thermal_marginal(eig, p.beta, grid), L=channel_16.L)
    assert est.value > classical


def test_enthalpic_1d_barrier_decreases_with_quantum_strength():
    """Pure-cosine 1D channel: the numerically extracted barrier height per
    unit energy falls as the thermal wavelength grows (enthalpic contrast)."""
    Mx, U0 = 256, 1.0
    H = chain_hamiltonian(Mx, 1.0, lambda x: U0 * np.cos(2 * np.pi * x))
    eig = diagonalize(H)
    dx = 1.0 / Mx
    x = dx * (np.arange(1, Mx + 1) - 0.5)
    barriers = []
    for beta in (0.01, 0.05, 0.1, 0.2):
        w = thermal_weights(eig.energies, beta)
        rho = (eig.modes**2) @ w / dx
        est = numeric_barrier(MarginalDensity(x=x, rho=rho, dx=dx))
        barriers.append(est.value / beta)    # energy barrier, not beta*dF
    assert all(b2 < b1 for b1, b2 in zip(barriers, barriers[1:]))
    # lambda_T^2 = 2 pi beta is still sizable at beta = 0.01; allow the
    # corresponding few-percent reduction below the classical value 2 U0
    assert barriers[0] == pytest.approx(2.0 * U0, rel=0.08)
    assert barriers[0] < 2.0 * U0
