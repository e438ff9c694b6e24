import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from qchannel import fickjacobs as fj
from qchannel.model import ChannelParams, derive_scales


@pytest.fixture
def p03():
    return ChannelParams(k0=1.0, k1=0.3)


def quartic_potential(p: ChannelParams, q: float = 0.4):
    """Soft anharmonic test potential U = 1/2 k(x) y^2 + q y^4."""
    k, k0, k1, L = p.stiffness, p.k0, p.k1, p.L
    dk = lambda x: -k0 * k1 * (2 * math.pi / L) * math.sin(2 * math.pi * x / L)
    return fj.TransversePotential(
        u=lambda x, y: 0.5 * k(x) * y * y + q * y**4,
        du_dx=lambda x, y: 0.5 * dk(x) * y * y,
        du_dy=lambda x, y: k(x) * y + 4 * q * y**3,
        d2u_dy2=lambda x, y: k(x) + 12 * q * y * y,
        y_scale=math.sqrt(2.0 / (p.beta * p.k0 * (1 - p.k1))),
    )


# ---------------------------------------------------------------------------
# closed forms


def test_classical_free_energy_values(p03):
    assert fj.classical_free_energy(p03, 0.0) == pytest.approx(
        0.5 * math.log(1.3), rel=1e-14)
    assert fj.classical_free_energy(p03, 0.0) == pytest.approx(0.131182, abs=1e-6)
    flat = ChannelParams(k0=2.0, k1=0.0)
    x = np.linspace(0, 1, 7)
    assert np.allclose(fj.classical_free_energy(flat, x), 0.0, atol=1e-15)


def test_quantum_correction_values(p03):
    assert fj.quantum_free_energy_correction(p03, 0.0) == pytest.approx(2.6, rel=1e-14)
    flat = ChannelParams(k0=5.0, k1=0.0)
    x = np.linspace(0, 1, 5)
    assert np.allclose(fj.quantum_free_energy_correction(flat, x), 2.0, atol=1e-14)


def test_barrier_closed_form(p03):
    assert fj.free_energy_barrier(p03, 0.0) == pytest.approx(
        0.5 * math.log(1.3 / 0.7), abs=1e-15)
    assert fj.free_energy_barrier(p03, 0.0) == pytest.approx(0.309520, abs=1e-6)
    assert fj.free_energy_barrier(p03, 0.1) == pytest.approx(0.429520, abs=1e-6)
    assert fj.free_energy_barrier(ChannelParams(k0=1.0), 0.7) == 0.0


@given(lam=st.floats(0, 2), k1=st.floats(0.01, 0.9))
@settings(max_examples=40, deadline=None)
def test_barrier_affine_in_lambda_with_slope_4k1(lam, k1):
    p = ChannelParams(k0=1.0, k1=k1)
    b0 = fj.free_energy_barrier(p, 0.0)
    assert fj.free_energy_barrier(p, lam) == pytest.approx(
        b0 + 4.0 * k1 * lam, rel=1e-12, abs=1e-12)


def test_barrier_matches_profile_maximum_minus_minimum(p03):
    prof = fj.free_energy_profile(p03, 0.25, 801)
    assert prof.barrier() == pytest.approx(fj.free_energy_barrier(p03, 0.25), rel=1e-6)


def test_profile_periodic_endpoints(p03):
    prof = fj.free_energy_profile(p03, 0.1)
    assert prof.a0[0] == pytest.approx(prof.a0[-1], abs=1e-12)
    assert prof.f_lambda[0] == pytest.approx(prof.f_lambda[-1], abs=1e-12)
    assert np.allclose(prof.total, prof.a0 + 0.1 * prof.f_lambda, atol=1e-15)


def test_classical_limit_profile_is_a0(p03):
    prof = fj.free_energy_profile(p03, 0.0)
    assert np.array_equal(prof.total, prof.a0)


# ---------------------------------------------------------------------------
# quadrature path against the closed forms (independent oracle: scipy.quad)


def test_quadrature_a0_matches_closed_form(p03):
    pot = fj.harmonic_transverse_potential(p03)
    L_y = derive_scales(p03).L_y
    xs = np.linspace(0.0, p03.L, 16, endpoint=False)
    quad_vals = np.array([
        fj.classical_free_energy_quadrature(pot, p03.beta, L_y, x) for x in xs])
    closed = fj.classical_free_energy(p03, xs)
    # the quadrature value includes the known constant -1/2 ln(pi)
    np.testing.assert_allclose(quad_vals + 0.5 * math.log(math.pi), closed,
                               atol=1e-8)
    diffs_q = quad_vals - quad_vals[0]
    diffs_c = closed - closed[0]
    np.testing.assert_allclose(diffs_q, diffs_c, atol=1e-8)


def test_quadrature_f_lambda_matches_closed_form(p03):
    pot = fj.harmonic_transverse_potential(p03)
    L_y = derive_scales(p03).L_y
    for x in (0.3 * p03.L, 0.11, 0.5, 0.77):
        got = fj.quantum_correction_quadrature(pot, p03.beta, L_y, x)
        want = (fj.quantum_free_energy_correction(p03, x)
                - fj.quantum_free_energy_correction(p03, 0.0))
        assert got == pytest.approx(want, abs=1e-6)


def test_quadrature_profile_barrier_slope(p03):
    """Anti-tunneling at first order on the quadrature path too."""
    pot = fj.harmonic_transverse_potential(p03)
    L_y = derive_scales(p03).L_y
    for lam in (0.0, 0.1):
        prof = fj.quadrature_profile(pot, p03.beta, L_y, lam, p03.L, 17)
        assert prof.barrier() == pytest.approx(
            fj.free_energy_barrier(p03, lam), abs=2e-5)


# ---------------------------------------------------------------------------
# transverse integral identities


def _a0_quad(pot, beta, L_y, x):
    return fj.classical_free_energy_quadrature(pot, beta, L_y, x)


@pytest.mark.parametrize("potfn", ["harmonic", "quartic"])
def test_average_force_equals_dA0(potfn, p03):
    """<beta dU/dx> equals beta dA0/dx; oracle is a central difference of the
    quadrature A0 (independent of the transverse-average route)."""
    pot = (fj.harmonic_transverse_potential(p03) if potfn == "harmonic"
           else quartic_potential(p03))
    L_y = derive_scales(p03).L_y
    rng = np.random.default_rng(7)
    h = 1e-5
    for x in rng.uniform(0.02, 0.98, size=10):
        avg = p03.beta * fj.transverse_average(pot, p03.beta, x, pot.du_dx)
        fd = (_a0_quad(pot, p03.beta, L_y, x + h)
              - _a0_quad(pot, p03.beta, L_y, x - h)) / (2 * h)
        assert avg == pytest.approx(fd, abs=1e-6)


@pytest.mark.parametrize("potfn", ["harmonic", "quartic"])
def test_vanishing_boundary_identity(potfn, p03):
    """Int e^{-beta U} (d2(beta U) - (beta dU)^2) dy integrates to a boundary
    term and vanishes for confining potentials."""
    pot = (fj.harmonic_transverse_potential(p03) if potfn == "harmonic"
           else quartic_potential(p03))
    beta = p03.beta
    for x in (0.0, 0.21, 0.5, 0.83):
        val, _ = integrate.quad(
            lambda y: math.exp(-beta * pot.u(x, y))
            * (beta * pot.d2u_dy2(x, y) - (beta * pot.du_dy(x, y)) ** 2),
            -30 * pot.y_scale, 30 * pot.y_scale, limit=400)
        assert abs(val) <= 1e-8


# ---------------------------------------------------------------------------
# equilibrium density


def test_density_classical_value(p03):
    rho = fj.equilibrium_density(p03, 0.0, 0.0)
    assert rho == pytest.approx(math.sqrt(math.pi / 1.3), rel=1e-14)


def test_density_flat_channel_constant():
    p = ChannelParams(k0=1.0, k1=0.0)
    x = np.linspace(0, 1, 9)
    rho = fj.equilibrium_density(p, 0.05, x)
    np.testing.assert_allclose(rho, math.sqrt(math.pi) - 0.1, atol=1e-14)


def test_density_first_order_value(p03):
    rho = fj.equilibrium_density(p03, 0.1, 0.0)
    assert rho == pytest.approx(math.sqrt(math.pi / 1.3) - 0.26, rel=1e-13)


def test_density_fugacity_prefactor(p03):
    rho0 = fj.equilibrium_density(p03, 0.05, 0.2)
    rho = fj.equilibrium_density(p03, 0.05, 0.2, mu_minus_mu0=0.3, rho0=2.0)
    assert rho == pytest.approx(2.0 * math.exp(p03.beta * 0.3) * rho0, rel=1e-13)


def test_density_expansion_breakdown_flags_not_fails(p03):
    with pytest.warns(fj.ExpansionWarning):
        rho = fj.equilibrium_density(p03, 1.5, np.linspace(0, 1, 33))
    assert np.all(np.isfinite(rho))


# ---------------------------------------------------------------------------
# flux


def test_flux_factor_flat_channel():
    assert fj.flux_quantum_factor(ChannelParams(k0=3.0)) == pytest.approx(
        -2.0, rel=1e-12)


def test_flux_factor_against_quad_oracle(p03):
    num, _ = integrate.quad(lambda x: (1 + 0.3 * math.cos(2 * math.pi * x)) ** 1.5,
                            0, 1, limit=200)
    den, _ = integrate.quad(lambda x: (1 + 0.3 * math.cos(2 * math.pi * x)) ** 0.5,
                            0, 1, limit=200)
    oracle = -2.0 * num / den
    assert fj.flux_quantum_factor(p03) == pytest.approx(oracle, rel=1e-10)
    assert oracle == pytest.approx(-2.046, abs=1e-3)


def test_flux_factor_matches_general_profile_expression(p03):
    prof = fj.free_energy_profile(p03, 0.07, 4097)
    got = fj.flux_quantum_factor_from_profile(
        prof, rho_lambda_at_x1=fj.density_correction(p03, 0.0))
    assert got == pytest.approx(fj.flux_quantum_factor(p03), abs=1e-6)


def test_steady_state_equilibrium_reduces_to_density(p03):
    x, rho, flux = fj.steady_state_1d(p03, 0.05, mu1=0.2, mu2=0.2)
    assert flux.j_cl_over_D == pytest.approx(0.0, abs=1e-15)
    assert flux.j_total_over_D == pytest.approx(0.0, abs=1e-15)
    want = fj.equilibrium_density(p03, 0.05, x, mu_minus_mu0=0.2)
    # the steady solution resums the correction into exp(-beta F); it matches
    # the strictly linear density up to the first-order convention: ~1% in
    # shape after normalization, a few percent in absolute scale
    np.testing.assert_allclose(rho, want, rtol=6e-2)
    np.testing.assert_allclose(rho / np.trapezoid(rho, x),
                               want / np.trapezoid(want, x), rtol=1.5e-2)


def test_steady_state_flux_decomposition_invariant(p03):
    _, _, flux = fj.steady_state_1d(p03, 0.08, mu1=0.4, mu2=-0.1)
    assert flux.j_total_over_D == flux.j_cl_over_D * (1 + 0.08 * flux.j_lambda)
    assert flux.j_lambda == pytest.approx(fj.flux_quantum_factor(p03), rel=1e-12)


@given(mu1=st.floats(-0.5, 0.5), mu2=st.floats(-0.5, 0.5))
@settings(max_examples=25, deadline=None)
def test_flux_antisymmetry(mu1, mu2):
    p = ChannelParams(k0=1.0, k1=0.25)
    _, _, f12 = fj.steady_state_1d(p, 0.05, mu1, mu2, n_samples=65)
    _, _, f21 = fj.steady_state_1d(p, 0.05, mu2, mu1, n_samples=65)
    assert f12.j_cl_over_D == pytest.approx(-f21.j_cl_over_D, rel=1e-12, abs=1e-15)
    assert f12.j_total_over_D == pytest.approx(-f21.j_total_over_D,
                                               rel=1e-12, abs=1e-15)


def test_steady_state_boundary_densities(p03):
    x, rho, _ = fj.steady_state_1d(p03, 0.04, mu1=0.3, mu2=-0.2)
    for xi, mui, idx in ((0.0, 0.3, 0), (p03.L, -0.2, -1)):
        want = (math.exp(p03.beta * mui) * math.sqrt(math.pi / (p03.stiffness(xi) / p03.k0))
                * (1 + 0.04 * fj.density_correction(p03, xi)))
        assert rho[idx] == pytest.approx(want, rel=1e-9)


def test_steady_state_from_profile_nonperiodic_warns(p03):
    prof = fj.FreeEnergyProfile(
        x=np.linspace(0, 1, 9), a0=np.linspace(0, 0.5, 9),
        f_lambda=np.ones(9), lam=0.05)
    with pytest.warns(UserWarning, match="periodic"):
        _, _, flux = fj.steady_state_from_profile(prof, 1.0, 0.1, -0.1, -2.0)
    assert math.isnan(flux.j_lambda)


# ---------------------------------------------------------------------------
# enthalpic 1D contrast


def test_enthalpic_barrier_values():
    assert fj.enthalpic_1d_barrier(1.0, 0.0, 1.0) == 2.0
    assert fj.enthalpic_1d_barrier(1.0, math.sqrt(0.1), 1.0) == pytest.approx(
        2.0 * (1 - math.pi / 120.0), rel=1e-14)
    assert fj.enthalpic_1d_barrier(1.0, math.sqrt(0.1), 1.0) == pytest.approx(
        1.947640, abs=1e-6)


def test_enthalpic_barrier_forced_zero_rejected_at_boundary():
    # lambda_T^2/L^2 = 12/pi is the analytic zero; the precondition stops just there
    lamT = math.sqrt(12.0 / math.pi) * (1 - 1e-12)
    assert fj.enthalpic_1d_barrier(1.0, lamT, 1.0) == pytest.approx(0.0, abs=1e-9)
    with pytest.raises(ValueError):
        fj.enthalpic_1d_barrier(1.0, math.sqrt(12.0 / math.pi) * 1.01, 1.0)


def test_profile_validation():
    with pytest.raises(ValueError):
        fj.FreeEnergyProfile(x=np.array([0.0, 0.5, 0.4]), a0=np.zeros(3),
                             f_lambda=np.zeros(3), lam=0.0)
    with pytest.raises(ValueError):
        fj.FreeEnergyProfile(x=np.array([0.1, 0.5, 1.0]), a0=np.zeros(3),
                             f_lambda=np.zeros(3), lam=0.0)
