"""Effective one-dimensional reduction of the corrugated channel.

The transverse direction is integrated out to give an effective free energy
beta*F(x) = beta*A0(x) + Lambda * beta*F_Lambda(x): a classical entropic part
plus the leading quantum correction, linear in the quantum parameter Lambda.
For the modulated harmonic channel both pieces have closed forms,

    beta*A0(x)       = 1/2 ln(k(x)/k0)          (up to an x-independent constant)
    beta*F_Lambda(x) = 2 k(x)/k0

and the barrier is beta*dF = 1/2 ln((1+k1)/(1-k1)) + 4 Lambda k1, i.e. the
quantum correction *raises* the entropic barrier.  General soft potentials go
through the quadrature path, which evaluates the same objects as certified
transverse/longitudinal integrals.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .model import TWO_PI, ChannelParams, derive_scales


class QuadratureError(RuntimeError):
    """Raised when an adaptive integral fails to settle; carries the estimate."""

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class ExpansionWarning(UserWarning):
    """First-order quantum correction is no longer small against the classical term."""


# ---------------------------------------------------------------------------
# closed forms for the harmonic channel


def classical_free_energy(p: ChannelParams, x):
    """beta*A0(x) = 1/2 ln(k(x)/k0) for the harmonic channel.

    The additive constant is fixed so the value vanishes where k(x) = k0.
    """
    return 0.5 * np.log(p.stiffness(x) / p.k0)


def quantum_free_energy_correction(p: ChannelParams, x):
    """beta*F_Lambda(x) = 2 k(x)/k0 for the harmonic channel."""
    return 2.0 * p.stiffness(x) / p.k0


def free_energy_barrier(p: ChannelParams, Lambda: float) -> float:
    """beta*dF = 1/2 ln((1+k1)/(1-k1)) + 4 Lambda k1 (harmonic closed form)."""
    return 0.5 * math.log((1.0 + p.k1) / (1.0 - p.k1)) + 4.0 * Lambda * p.k1


def enthalpic_1d_barrier(U0: float, lambda_T: float, L: float) -> float:
    """Barrier of a strictly 1D cosine potential with the leading quantum correction.

    dpsi = 2 U0 (1 - (pi/12) lambda_T^2 / L^2): pure enthalpy, so here the
    quantum correction *lowers* the barrier, opposite to the entropic channel.
    """
    ratio = math.pi * lambda_T**2 / (12.0 * L**2)
    if ratio >= 1.0:
        raise ValueError(
            "lambda_T^2 * pi / 12 must stay below L^2 for a positive barrier, "
            f"got ratio {ratio:.3g}"
        )
    return 2.0 * U0 * (1.0 - ratio)


# ---------------------------------------------------------------------------
# sampled profile


@dataclass(frozen=True)
class FreeEnergyProfile:
    """Sampled effective free energy on [0, L], classical and O(Lambda) parts apart.

    total(x) is assembled linearly: a0 + Lambda * f_lambda.
    """

    x: np.ndarray
    a0: np.ndarray
    f_lambda: np.ndarray
    lam: float

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim != 1 or x.size < 2:
            raise ValueError("profile needs at least two x samples")
        if np.any(np.diff(x) <= 0):
            raise ValueError("x samples must be strictly increasing")
        if x[0] != 0.0:
            raise ValueError("profile must start at x = 0")

    @property
    def total(self) -> np.ndarray:
        return self.a0 + self.lam * self.f_lambda

    def barrier(self) -> float:
        """max - min of the assembled profile."""
        t = self.total
        return float(t.max() - t.min())


def free_energy_profile(p: ChannelParams, Lambda: float,
                        n_samples: int = 257) -> FreeEnergyProfile:
    """Closed-form profile of the harmonic channel on n_samples points of [0, L]."""
    x = np.linspace(0.0, p.L, n_samples)
    return FreeEnergyProfile(
        x=x,
        a0=classical_free_energy(p, x),
        f_lambda=quantum_free_energy_correction(p, x),
        lam=Lambda,
    )


# ---------------------------------------------------------------------------
# general-potential quadrature path


@dataclass(frozen=True)
class TransversePotential:
    """Soft 2D potential with the partial derivatives the reduction needs.

    All callables take (x, y) and must decay fast enough in |y| for the
    transverse integrals to converge (Gaussian-like confinement).
    """

    u: Callable[[float, float], float]
    du_dx: Callable[[float, float], float]
    du_dy: Callable[[float, float], float]
    d2u_dy2: Callable[[float, float], float]
    y_scale: float  # decay scale of exp(-beta U) in y, used to seed cutoffs


def harmonic_transverse_potential(p: ChannelParams) -> TransversePotential:
    k = p.stiffness
    dk = lambda x: -p.k0 * p.k1 * (TWO_PI / p.L) * math.sin(TWO_PI * x / p.L)
    return TransversePotential(
        u=lambda x, y: 0.5 * k(x) * y * y,
        du_dx=lambda x, y: 0.5 * dk(x) * y * y,
        du_dy=lambda x, y: k(x) * y,
        d2u_dy2=lambda x, y: k(x),
        y_scale=math.sqrt(2.0 / (p.beta * p.k0 * (1.0 - p.k1))),
    )


_Y_DOUBLINGS = 12
_Y_SETTLE = 1e-10


def _transverse_integral(f, y0: float):
    """Adaptive integral of f over y in [-Y, Y], doubling Y until it settles."""
    Y = 8.0 * y0
    prev, prev_err = integrate.quad(f, -Y, Y, epsabs=1e-13, epsrel=1e-12, limit=200)
    for _ in range(_Y_DOUBLINGS):
        Y *= 2.0
        cur, err = integrate.quad(f, -Y, Y, epsabs=1e-13, epsrel=1e-12, limit=200)
        if abs(cur - prev) < _Y_SETTLE * max(1.0, abs(cur)):
            return cur, err
        prev, prev_err = cur, err
    raise QuadratureError(
        f"transverse integral did not settle after {_Y_DOUBLINGS} cutoff doublings",
        estimate=prev, error=prev_err,
    )


def transverse_average(pot: TransversePotential, beta: float, x: float, f):
    """< f(x, y) > over the normalized transverse Boltzmann weight at fixed x."""
    w = lambda y: math.exp(-beta * pot.u(x, y))
    num, _ = _transverse_integral(lambda y: w(y) * f(x, y), pot.y_scale)
    den, _ = _transverse_integral(w, pot.y_scale)
    return num / den


def classical_free_energy_quadrature(pot: TransversePotential, beta: float,
                                     L_y: float, x: float) -> float:
    """beta*A0(x) = -ln Int exp(-beta U(x, y)) dy / L_y by adaptive quadrature."""
    val, _ = _transverse_integral(lambda y: math.exp(-beta * pot.u(x, y)), pot.y_scale)
    return -math.log(val / L_y)


def _f_lambda_derivative(pot: TransversePotential, beta: float, L_y: float,
                         x: float) -> float:
    """d/dx of beta*F_Lambda at x: the two grouped transverse averages."""
    # <beta dU/dx> equals beta dA0/dx (integration-by-parts identity, tested).
    da0 = beta * transverse_average(pot, beta, x, pot.du_dx)
    avg_d2 = beta * transverse_average(pot, beta, x, pot.d2u_dy2)
    mixed = transverse_average(
        pot, beta, x,
        lambda xx, yy: ((beta * pot.du_dy(xx, yy)) ** 2
                        - 2.0 * beta * pot.d2u_dy2(xx, yy)) * beta * pot.du_dx(xx, yy),
    )
    return da0 * L_y**2 * avg_d2 + L_y**2 * mixed


def quantum_correction_quadrature(pot: TransversePotential, beta: float,
                                  L_y: float, x: float) -> float:
    """beta*F_Lambda(x) as the x-antiderivative of its transverse-average derivative.

    The integration constant is fixed by starting the antiderivative at x = 0,
    so the quadrature value is F_Lambda(x) - F_Lambda(0).  Only differences of
    F_Lambda enter observables, so the offset is immaterial; comparisons with
    the harmonic closed form 2 k(x)/k0 must align the x = 0 values.
    """
    if x == 0.0:
        return 0.0
    val, err = integrate.quad(
        lambda t: _f_lambda_derivative(pot, beta, L_y, t), 0.0, x,
        epsabs=1e-11, epsrel=1e-10, limit=100,
    )
    if err > 1e-7 * max(1.0, abs(val)):
        raise QuadratureError("x-antiderivative of F_Lambda did not converge",
                              estimate=val, error=err)
    return val


def quadrature_profile(pot: TransversePotential, beta: float, L_y: float,
                       Lambda: float, L: float,
                       n_samples: int = 17) -> FreeEnergyProfile:
    """General-potential profile via the quadrature path (slow, certified)."""
    x = np.linspace(0.0, L, n_samples)
    a0 = np.array([classical_free_energy_quadrature(pot, beta, L_y, xi) for xi in x])
    fl = np.array([quantum_correction_quadrature(pot, beta, L_y, xi) for xi in x])
    return FreeEnergyProfile(x=x, a0=a0, f_lambda=fl, lam=Lambda)


# ---------------------------------------------------------------------------
# longitudinal integrals (periodic, smooth): composite rule + Richardson check


def periodic_integral(f, L: float, panels: int = 1024) -> float:
    """Integral over one period of a smooth periodic integrand.

    Composite trapezoid (spectrally accurate for periodic functions) with a
    panel-doubling Richardson consistency check.
    """
    if panels < 512:
        panels = 512
    coarse = _trap_periodic(f, L, panels // 2)
    fine = _trap_periodic(f, L, panels)
    if abs(fine - coarse) > 1e-9 * max(1.0, abs(fine)):
        finer = _trap_periodic(f, L, 4 * panels)
        if abs(finer - fine) > 1e-9 * max(1.0, abs(finer)):
            raise QuadratureError("periodic integral failed its Richardson check",
                                  estimate=finer, error=abs(finer - fine))
        return finer
    return fine


def _trap_periodic(f, L, n):
    x = np.arange(n) * (L / n)
    return float(np.sum(f(x)) * (L / n))


# ---------------------------------------------------------------------------
# equilibrium density and steady-state transport


def density_correction(p: ChannelParams, x):
    """rho_Lambda(x) = -2 k(x)/k0: first-order density correction of the channel."""
    return -2.0 * p.stiffness(x) / p.k0


def equilibrium_density(p: ChannelParams, Lambda: float, x,
                        mu_minus_mu0: float = 0.0, rho0: float = 1.0):
    """First-order equilibrium marginal rho(x) of the harmonic channel.

    rho = rho0 exp(beta (mu - mu0)) * (rho_cl + Lambda rho_Lambda) with
    rho_cl = sqrt(pi k0 / k(x)) and rho_Lambda = -2 k(x)/k0.  Warns (does not
    fail) when the correction exceeds the classical term anywhere: there the
    linear-in-Lambda expansion has broken down.
    """
    x = np.asarray(x, dtype=float)
    rho_cl = np.sqrt(math.pi * p.k0 / p.stiffness(x))
    rho_lam = density_correction(p, x)
    if np.any(Lambda * np.abs(rho_lam) > rho_cl):
        warnings.warn(
            "Lambda * |rho_Lambda| exceeds rho_cl somewhere: first-order "
            "density expansion broken", ExpansionWarning, stacklevel=2,
        )
    return rho0 * math.exp(p.beta * mu_minus_mu0) * (rho_cl + Lambda * rho_lam)


@dataclass(frozen=True)
class FluxResult:
    """Steady flux through one period, decomposed as J/D = (J_cl/D)(1 + Lambda J_Lambda)."""

    j_cl_over_D: float
    j_lambda: float
    lam: float

    @property
    def j_total_over_D(self) -> float:
        return self.j_cl_over_D * (1.0 + self.lam * self.j_lambda)


def flux_quantum_factor(p: ChannelParams) -> float:
    """J_Lambda for the harmonic channel: -2 <(k/k0)^{3/2}> / <(k/k0)^{1/2}>.

    Independent of k0 and of the bias; -2 exactly for an uncorrugated channel.
    """
    knorm = lambda x: p.stiffness(x) / p.k0
    num = periodic_integral(lambda x: knorm(x) ** 1.5, p.L)
    den = periodic_integral(lambda x: np.sqrt(knorm(x)), p.L)
    return -2.0 * num / den


def flux_quantum_factor_from_profile(profile: FreeEnergyProfile,
                                     rho_lambda_at_x1: float) -> float:
    """General J_Lambda = rho_Lambda(x1) + beta F_Lambda(x1) - <beta F_Lambda>.

    The average weights with exp(beta A0); any additive constant in F_Lambda
    cancels between the boundary term and the average.
    """
    w = np.exp(profile.a0)
    avg = np.trapezoid(w * profile.f_lambda, profile.x) / np.trapezoid(w, profile.x)
    return rho_lambda_at_x1 + profile.f_lambda[0] - avg


def steady_state_1d(p: ChannelParams, Lambda: float, mu1: float, mu2: float,
                    n_samples: int = 513):
    """Steady density and flux for chemical potentials mu1, mu2 at x = 0 and x = L.

    Returns (x, rho, FluxResult).  The density is the general steady solution
    rho(x) = exp(-beta F) [-(J/D) Int_0^x exp(beta F) dx' + Pi] with boundary
    densities rho_{1,2} = exp(beta mu_{1,2}) exp(-beta A0) (1 + Lambda rho_Lambda);
    the reported FluxResult carries the first-order decomposition, whose
    j_lambda for the harmonic channel is the closed quadrature ratio.
    """
    z1 = math.exp(p.beta * mu1)
    z2 = math.exp(p.beta * mu2)
    x = np.linspace(0.0, p.L, n_samples)
    k = p.stiffness(x) / p.k0

    # sqrt(pi)-normalized classical part: exp(-beta A0) = sqrt(pi k0 / k).
    beta_A0 = 0.5 * np.log(k / math.pi)
    beta_F = beta_A0 + Lambda * 2.0 * k
    ebF = np.exp(beta_F)
    embF = np.exp(-beta_F)

    # boundary densities carry the first-order correction on top of the
    # classical weight (the profile exponential would double-count it)
    rho1 = z1 * math.exp(-beta_A0[0]) * (1.0 + Lambda * density_correction(p, 0.0))
    rho2 = z2 * math.exp(-beta_A0[-1]) * (1.0 + Lambda * density_correction(p, p.L))

    cum = integrate.cumulative_trapezoid(ebF, x, initial=0.0)
    j_over_D_exact = (rho1 * ebF[0] - rho2 * ebF[-1]) / cum[-1]
    Pi = rho1 * ebF[0]
    rho = embF * (-j_over_D_exact * cum + Pi)

    j_cl = (z1 - z2) / periodic_integral(lambda t: np.sqrt(p.stiffness(t) / p.k0), p.L)
    flux = FluxResult(j_cl_over_D=j_cl, j_lambda=flux_quantum_factor(p), lam=Lambda)
    return x, rho, flux


def steady_state_from_profile(profile: FreeEnergyProfile, beta: float,
                              mu1: float, mu2: float, rho_lambda_x1: float,
                              periodic_tol: float = 1e-6):
    """Steady state over a sampled general-potential profile.

    Warns when the classical endpoints A0(0), A0(L) differ beyond tolerance:
    the periodic-potential simplification of the flux decomposition is then
    not applied and j_lambda is reported as nan.
    """
    z1, z2 = math.exp(beta * mu1), math.exp(beta * mu2)
    drift = abs(profile.a0[0] - profile.a0[-1])
    periodic = drift <= periodic_tol
    if not periodic:
        warnings.warn(
            f"A0 endpoints differ by {drift:.3g}: periodic-potential flux "
            "decomposition not applied", UserWarning, stacklevel=2,
        )
    bF = profile.total
    ebF = np.exp(bF)
    embF = np.exp(-bF)
    rho1 = z1 * math.exp(-profile.a0[0]) * (1.0 + profile.lam * rho_lambda_x1)
    rho2 = z2 * math.exp(-profile.a0[-1]) * (1.0 + profile.lam * rho_lambda_x1)
    cum = integrate.cumulative_trapezoid(ebF, profile.x, initial=0.0)
    j_over_D = (rho1 * ebF[0] - rho2 * ebF[-1]) / cum[-1]
    rho = embF * (-j_over_D * cum + rho1 * ebF[0])

    if periodic:
        w = np.exp(profile.a0)
        j_cl = (z1 - z2) / np.trapezoid(w, profile.x)
        j_lam = flux_quantum_factor_from_profile(profile, rho_lambda_x1)
    else:
        j_cl, j_lam = j_over_D, math.nan
    return profile.x, rho, FluxResult(j_cl_over_D=j_cl, j_lambda=j_lam, lam=profile.lam)


def profile_csv_rows(profile: FreeEnergyProfile, p: ChannelParams):
    """Rows (x, a0, f_lambda, total, rho) for CSV export of a profile."""
    rho = equilibrium_density(p, profile.lam, profile.x)
    total = profile.total
    for i in range(profile.x.size):
        yield (profile.x[i], profile.a0[i], profile.f_lambda[i], total[i], rho[i])
