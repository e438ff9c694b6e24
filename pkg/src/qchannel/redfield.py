"""Kinetic equation for the single-particle density matrix with particle leads.

Two reservoirs couple to the end columns of the open-boundary lattice.  In the
weak-coupling Born-Markov limit with a constant spectral density gamma and
classical lead occupations n_cl(E) = exp(-beta (E - mu)), the single-particle
density matrix sigma[a, b] = <adag_b a_a> obeys the linear-affine equation

    d sigma / dt = (1/hbar) [ -i (h sigma - sigma h)
                              + sum_leads (F P + P F + sigma (F - G) P + P (F - G) sigma) ]

where P projects onto the lead's edge column, F is the mode sum
gamma * Phi n_cl(E) Phi^T and G = gamma * Phi Phi^T (= gamma * identity by
completeness).  The steady state therefore solves a Sylvester equation
A sigma + sigma A^H = -C, which is what the ``direct`` method does; ``relax``
time-integrates the same equation with an unconditionally stable exponential
stepper.  Principal-value (Lamb-shift) terms are dropped throughout and the
half-line Fourier factor pi is absorbed into gamma.

Convention: ``lead_current`` is the particle rate *into the system* through a
lead, so a positive left current with mu_l > mu_r means net left-to-right flow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.special import i0e

from .lattice import GridSpec, SpectralDecomposition, hopping_energies
from .model import ChannelParams, potential_eval

#: Size cap for the dense Sylvester solve (N^2 unknowns).
MAX_DIRECT = 600


@dataclass(frozen=True)
class LeadSpec:
    """Reservoir attached to one edge column: side, chemical potential,
    coupling strength gamma (constant spectral density), inverse temperature."""

    side: str              # "left" | "right"
    mu: float
    gamma: float
    beta: float

    def __post_init__(self):
        if self.side not in ("left", "right"):
            raise ValueError(f"side must be 'left' or 'right', got {self.side!r}")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")


@dataclass(frozen=True)
class BathCoefficients:
    """Coupling kernels of one lead, stored on the edge columns only.

    f_edge[a, m] = gamma sum_k phi_k(a) phi_k(edge_m) n_cl(E_k)
    g_edge[a, m] = gamma sum_k phi_k(a) phi_k(edge_m)   (J(-E) = gamma, const)

    With real orthonormal modes both kernels are slices of symmetric matrices;
    g equals gamma * delta by completeness, but is computed from the mode sum
    so the identity can be verified rather than assumed.
    """

    lead: LeadSpec
    edge_sites: np.ndarray    # flat indices of the coupled column
    f_edge: np.ndarray        # (n_sites, My)
    g_edge: np.ndarray        # (n_sites, My)

    @property
    def relax(self) -> np.ndarray:
        return self.f_edge - self.g_edge


def classical_occupation(energies, beta: float, mu: float) -> np.ndarray:
    """n_cl(E) = exp(-beta (E - mu)), the small-occupation limit of Bose-Einstein."""
    return np.exp(-beta * (np.asarray(energies) - mu))


def edge_column(grid: GridSpec, side: str) -> np.ndarray:
    return grid.column_sites(0 if side == "left" else grid.Mx - 1)


def bath_coefficients(eig: SpectralDecomposition, lead: LeadSpec,
                      grid: GridSpec) -> BathCoefficients:
    edge = edge_column(grid, lead.side)
    phi_e = eig.modes[edge, :]                      # (My, n)
    n_cl = classical_occupation(eig.energies, lead.beta, lead.mu)
    f_edge = eig.modes @ (phi_e * (lead.gamma * n_cl)).T
    g_edge = eig.modes @ (phi_e * lead.gamma).T
    return BathCoefficients(lead=lead, edge_sites=edge, f_edge=f_edge, g_edge=g_edge)


def kinetic_rhs(sigma: np.ndarray, h: np.ndarray,
                coeffs: list[BathCoefficients], hbar: float = 1.0) -> np.ndarray:
    """Right-hand side of the kinetic equation: coherent commutator plus the
    lead dissipators (injection constants on the edge rows/columns, relaxation
    terms f - g acting through sigma)."""
    rhs = -1j * (h @ sigma - sigma @ h)
    for c in coeffs:
        e = c.edge_sites
        rel = c.relax
        rhs[:, e] += c.f_edge
        rhs[e, :] += c.f_edge.T
        rhs[:, e] += sigma @ rel
        rhs[e, :] += rel.T @ sigma
    return rhs / hbar


def _sylvester_parts(h: np.ndarray, coeffs: list[BathCoefficients],
                     hbar: float):
    """A and C of the equivalent Sylvester form A sigma + sigma A^H + C = 0."""
    n = h.shape[0]
    A = (-1j * h).astype(complex)
    C = np.zeros((n, n), dtype=complex)
    for c in coeffs:
        e = c.edge_sites
        A[e, :] += c.relax.T
        C[:, e] += c.f_edge
        C[e, :] += c.f_edge.T
    return A / hbar, C / hbar


@dataclass
class SteadyStateResult:
    sigma: np.ndarray
    residual: float           # max |d sigma / dt| at the returned state
    method: str
    iterations: int
    coeffs: list
    h: np.ndarray
    hbar: float
    tolerance: float

    def converged(self) -> bool:
        return self.residual <= self.tolerance


def pdm_checks(sigma: np.ndarray) -> dict:
    """Diagnostics for a physical single-particle density matrix."""
    herm = float(np.max(np.abs(sigma - sigma.conj().T)))
    diag = sigma.diagonal().real
    return {
        "hermiticity_defect": herm,
        "min_occupation": float(diag.min()),
        "trace": float(diag.sum()),
        "max_imag_diag": float(np.max(np.abs(sigma.diagonal().imag))),
    }


def _hermitize(sigma):
    return 0.5 * (sigma + sigma.conj().T)


def steady_state(h, grid: GridSpec, eig: SpectralDecomposition,
                 leads: list[LeadSpec], method: str = "direct",
                 eps: float | None = None, hbar: float = 1.0,
                 relax_dt: float | None = None,
                 max_iter: int = 20000) -> SteadyStateResult:
    """Solve d sigma/dt = 0 for the open channel.

    ``direct`` solves the Sylvester system exactly (dense, N <= 600) with
    iterative refinement against the kinetic right-hand side; ``relax``
    applies the exact exponential propagator of the linear-affine flow in
    steps of relax_dt (default 1/gamma_max) until the residual settles, which
    is unconditionally stable regardless of the Hamiltonian's norm.
    """
    if not leads:
        raise ValueError("at least one lead is required for a unique steady state")
    h = h.toarray() if sp.issparse(h) else np.asarray(h, dtype=float)
    n = h.shape[0]
    coeffs = [bath_coefficients(eig, lead, grid) for lead in leads]
    gmax = max(lead.gamma for lead in leads)
    if eps is None:
        eps = 1e-10 * gmax
    A, C = _sylvester_parts(h, coeffs, hbar)

    if method == "direct":
        if n > MAX_DIRECT:
            raise ValueError(
                f"direct steady-state solve limited to {MAX_DIRECT} sites, got {n}; "
                "use method='relax' or shrink the grid"
            )
        sigma = scipy.linalg.solve_sylvester(A, A.conj().T, -C)
        sigma = _hermitize(sigma)
        iters = 1
        res = float(np.max(np.abs(kinetic_rhs(sigma, h, coeffs, hbar))))
        while res > eps and iters < 6:
            R = kinetic_rhs(sigma, h, coeffs, hbar)
            sigma = _hermitize(sigma + scipy.linalg.solve_sylvester(A, A.conj().T, -R))
            res = float(np.max(np.abs(kinetic_rhs(sigma, h, coeffs, hbar))))
            iters += 1
        result = SteadyStateResult(sigma=sigma, residual=res, method="direct",
                                   iterations=iters, coeffs=coeffs, h=h,
                                   hbar=hbar, tolerance=eps)
    elif method == "relax":
        dt = relax_dt if relax_dt is not None else 1.0 / gmax
        block = np.zeros((2 * n, 2 * n), dtype=complex)
        block[:n, :n] = A
        block[:n, n:] = C
        block[n:, n:] = -A.conj().T
        E = scipy.linalg.expm(block * dt)
        U = E[:n, :n]
        V = E[:n, n:] @ U.conj().T
        Uh = U.conj().T
        sigma = np.zeros((n, n), dtype=complex)
        res = math.inf
        iters = 0
        while iters < max_iter:
            sigma = _hermitize(U @ sigma @ Uh + V)
            iters += 1
            if iters % 8 == 0 or iters < 4:
                res = float(np.max(np.abs(kinetic_rhs(sigma, h, coeffs, hbar))))
                if res <= eps:
                    break
        res = float(np.max(np.abs(kinetic_rhs(sigma, h, coeffs, hbar))))
        if res > eps:
            raise RuntimeError(
                f"relaxation did not reach residual {eps:.3g} after {iters} steps "
                f"of dt={dt:.3g} (residual {res:.3g}); increase relax_dt or max_iter"
            )
        result = SteadyStateResult(sigma=sigma, residual=res, method="relax",
                                   iterations=iters, coeffs=coeffs, h=h,
                                   hbar=hbar, tolerance=eps)
    else:
        raise ValueError(f"unknown method {method!r}; use 'direct' or 'relax'")
    return result


def lead_current(result: SteadyStateResult, side: str = "left",
                 check_residual: bool = True) -> float:
    """Signed particle rate into the system through the given lead.

    Positive means the lead injects; at steady state the left and right rates
    cancel.  Refuses to report when the steady-state residual is above its
    tolerance (the number would not be a steady current).
    """
    if check_residual and not result.converged():
        raise RuntimeError(
            f"steady state not converged (residual {result.residual:.3g} > "
            f"tolerance {result.tolerance:.3g}); refusing to report a current"
        )
    for c in result.coeffs:
        if c.lead.side == side:
            e = c.edge_sites
            inject = 2.0 * float(np.sum(c.f_edge[e, np.arange(e.size)]))
            flow = (result.sigma @ c.relax)[e, np.arange(e.size)]
            return (inject + 2.0 * float(np.sum(flow.real))) / result.hbar
    raise ValueError(f"no lead on side {side!r}")


# ---------------------------------------------------------------------------
# edge thermal weights for flux normalization


def thermal_edge_weight(eig: SpectralDecomposition, beta: float,
                        grid: GridSpec, side: str = "left") -> float:
    """Unnormalized thermal weight of the edge column, sum_k e^{-beta E_k}
    |phi_k(edge)|^2.  In the weak-coupling limit the injected current is
    proportional to this quantity."""
    edge = edge_column(grid, side)
    phi2 = np.sum(eig.modes[edge, :] ** 2, axis=0)
    return float(np.sum(phi2 * np.exp(-beta * eig.energies)))


def classical_edge_weight(p: ChannelParams, grid: GridSpec,
                          side: str = "left") -> float:
    """Classical-statistics counterpart of thermal_edge_weight.

    Factorizes kinetic and potential weights: the longitudinal factor is the
    exact edge-site weight of the free open chain (including the hard-wall
    boundary layer), the transverse factor is the free-lattice kinetic weight
    e^{-2 beta Jy} I0(2 beta Jy) times the Boltzmann sum over the edge-column
    potential.  Dividing a measured current by this weight strips the trivial
    thermal-wavelength drifts from a temperature sweep, leaving the genuine
    quantum correction factor.
    """
    Jx, Jy = hopping_energies(grid, p.hbar, p.mass)
    beta = p.beta
    Mx = grid.Mx
    n = np.arange(1, Mx + 1)
    eps_x = 2.0 * Jx * (1.0 - np.cos(math.pi * n / (Mx + 1)))
    w_edge = (2.0 / (Mx + 1)) * np.sin(math.pi * n / (Mx + 1)) ** 2
    ex = float(np.sum(w_edge * np.exp(-beta * eps_x)))

    x_edge = grid.x[0 if side == "left" else -1]
    u_col = potential_eval(p, x_edge, grid.y)
    ey = float(i0e(2.0 * beta * Jy) * np.sum(np.exp(-beta * u_col)))
    return ex * ey
