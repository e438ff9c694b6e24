"""Finite-difference solvers for the quantum Smoluchowski equation.

1D (dimensionless coordinate):  dp/dt = d_y [ d_y (D p) + p beta dU/dy ],
with D(y) = 1 / (1 - 2 Lambda d^2(beta U)/dy^2).  2D (channel coordinates):
dp/dt = div [ div(D_qm p) + p beta grad U ] with the diagonal tensor
D_c = 1 / (1 - 2 Lambda L_y^2 d_c^2 beta U), c in {x, y}.

Discretization is a conservative face-flux form.  Each face flux is
exponentially fitted,

    G = (D_face / h) (p_+ e^{theta/2} - p_- e^{-theta/2}),
    theta = ln(D_+/D_-) + beta dU * 2 / (D_- + D_+),

which reduces to the second-order central scheme for small theta but keeps
discrete detailed balance exact: wherever the continuum operator admits a
flux-free equilibrium (1D always; 2D in the classical limit), the discrete
steady state has face fluxes at solver precision instead of O((beta dU)^3)
spurious circulation.  Mass conservation is structural (each face appears
with opposite signs in its two cells) and implicit Euler preserves it exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .lattice import GridSpec
from .model import TWO_PI, ChannelParams, derive_scales, potential_eval


class ValidityError(ValueError):
    """Quantum diffusion factor lost positivity: outside the expansion's regime."""


# ---------------------------------------------------------------------------
# shared implicit-Euler relaxation


def _march_to_steady(M: sp.spmatrix, p0: np.ndarray, tol: float = 1e-10,
                     max_steps: int = 400):
    """Implicit Euler with a doubling step ladder until the relative density
    change per unit time falls below tol.  Unconditionally stable; the step
    ladder makes the approach to the null space geometric."""
    n = p0.size
    p = p0.copy()
    mass0 = p.sum()
    diag_scale = float(np.abs(M.diagonal()).max())
    dt = 0.2 / diag_scale if diag_scale > 0 else 1.0
    identity = sp.identity(n, format="csc")
    mass_drift = 0.0
    steps = 0
    while steps < max_steps:
        solver = splu((identity - dt * M).tocsc())
        # several steps per factorization amortize the LU cost
        for _ in range(3):
            p_new = solver.solve(p)
            steps += 1
            rate = np.max(np.abs(p_new - p)) / (dt * max(np.max(np.abs(p_new)), 1e-300))
            p = p_new
            mass_drift = max(mass_drift, abs(p.sum() - mass0) / abs(mass0))
            if rate < tol:
                return p, steps, mass_drift
        if dt < 1e15:
            dt *= 4.0
    raise RuntimeError(
        f"steady-state relaxation stalled after {steps} implicit steps "
        f"(last relative rate {rate:.3g}, dt {dt:.3g}): step-size control failed"
    )


def _face_theta(D_lo, D_hi, beta_dU):
    return np.log(D_hi / D_lo) + beta_dU * 2.0 / (D_lo + D_hi)


# ---------------------------------------------------------------------------
# 1D equilibrium


@dataclass(frozen=True)
class Pde1DResult:
    y: np.ndarray
    p_closed: np.ndarray      # first-order closed-form equilibrium, normalized
    p_steady: np.ndarray      # long-time limit of the PDE, normalized
    D: np.ndarray
    steps: int
    mass_drift: float
    max_flux_initial: float
    max_flux_final: float


def closed_equilibrium_1d(u, du, d2u, Lambda: float, beta: float,
                          y: np.ndarray) -> np.ndarray:
    """p_eq = N0 e^{-beta U} (1 - 2 Lambda beta U'' + Lambda (beta U')^2),
    normalized to unit mass on the grid."""
    y = np.asarray(y, dtype=float)
    p = np.exp(-beta * u(y)) * (1.0 - 2.0 * Lambda * beta * d2u(y)
                                + Lambda * (beta * du(y)) ** 2)
    dy = y[1] - y[0]
    return p / (p.sum() * dy)


def _fd_derivatives(u, y):
    h = 1e-5 * max(1.0, float(np.max(np.abs(y))))
    du = lambda yy: (u(yy + h) - u(yy - h)) / (2 * h)
    d2u = lambda yy: (u(yy + h) - 2 * u(yy) + u(yy - h)) / h**2
    return du, d2u


def _assemble_1d(y, D, beta_u):
    """Conservative exponential-fitted operator on a 1D grid, no-flux ends."""
    n = y.size
    dy = y[1] - y[0]
    theta = _face_theta(D[:-1], D[1:], beta_u[1:] - beta_u[:-1])
    Df = 0.5 * (D[:-1] + D[1:])
    c_hi = Df * np.exp(0.5 * theta) / dy       # multiplies p_{j+1}
    c_lo = Df * np.exp(-0.5 * theta) / dy      # multiplies p_j
    M = sp.lil_matrix((n, n))
    for j in range(n - 1):
        # dp_j/dt += G_j / dy ; dp_{j+1}/dt -= G_j / dy
        M[j, j + 1] += c_hi[j] / dy
        M[j, j] -= c_lo[j] / dy
        M[j + 1, j + 1] -= c_hi[j] / dy
        M[j + 1, j] += c_lo[j] / dy
    return M.tocsr(), (c_hi, c_lo)


def _face_flux_1d(p, c_hi, c_lo):
    return c_hi * p[1:] - c_lo * p[:-1]


def solve_equilibrium_1d(u, Lambda: float, beta: float, y: np.ndarray,
                         du=None, d2u=None, tol: float = 1e-10) -> Pde1DResult:
    """Closed-form first-order equilibrium and the PDE long-time limit.

    ``u`` is a confining potential sampled on the uniform grid ``y``
    (dimensionless coordinate); derivatives default to central differences.
    The two profiles agree to O(Lambda^2) after normalization.
    """
    y = np.asarray(y, dtype=float)
    if du is None or d2u is None:
        fd_du, fd_d2u = _fd_derivatives(u, y)
        du = du or fd_du
        d2u = d2u or fd_d2u
    D = 1.0 / (1.0 - 2.0 * Lambda * beta * d2u(y))
    if np.any(D <= 0) or np.any(1.0 - 2.0 * Lambda * beta * d2u(y) <= 0):
        raise ValidityError(
            "quantum diffusion factor non-positive on the grid: "
            "2 Lambda d^2(beta U) reaches 1, outside the expansion's validity"
        )
    beta_u = beta * u(y)
    M, (c_hi, c_lo) = _assemble_1d(y, D, beta_u)

    dy = y[1] - y[0]
    p0 = np.full(y.size, 1.0 / (y.size * dy))
    flux0 = float(np.max(np.abs(_face_flux_1d(p0, c_hi, c_lo))))
    p_ss, steps, drift = _march_to_steady(M, p0, tol=tol)
    p_ss = p_ss / (p_ss.sum() * dy)
    flux1 = float(np.max(np.abs(_face_flux_1d(p_ss, c_hi, c_lo))))
    return Pde1DResult(
        y=y, p_closed=closed_equilibrium_1d(u, du, d2u, Lambda, beta, y),
        p_steady=p_ss, D=D, steps=steps, mass_drift=drift,
        max_flux_initial=flux0, max_flux_final=flux1,
    )


# ---------------------------------------------------------------------------
# 2D channel


@dataclass(frozen=True)
class PdeField:
    x: np.ndarray
    y: np.ndarray
    p: np.ndarray             # (Mx, My) density, unit total mass
    Dx: np.ndarray
    Dy: np.ndarray
    steps: int
    mass_drift: float
    max_flux_initial: float
    max_flux_final: float

    @property
    def marginal(self) -> np.ndarray:
        """Longitudinal density rho(x_i) = sum_j p dy (integrates to one)."""
        dy = self.y[1] - self.y[0]
        return self.p.sum(axis=1) * dy


def quantum_diffusion_factors(p: ChannelParams, Lambda: float, x, y):
    """Diagonal diffusion tensor of the harmonic channel, with the curvature
    d^2 beta U evaluated analytically (beta k''(x) y^2 / 2 and beta k(x))."""
    s = derive_scales(p)
    X, Y = np.meshgrid(np.asarray(x), np.asarray(y), indexing="ij")
    kdd = -p.k0 * p.k1 * (TWO_PI / p.L) ** 2 * np.cos(TWO_PI * X / p.L)
    den_x = 1.0 - 2.0 * Lambda * s.L_y**2 * 0.5 * p.beta * kdd * Y**2
    den_y = 1.0 - 2.0 * Lambda * s.L_y**2 * p.beta * p.stiffness(X)
    if np.any(den_x <= 0) or np.any(den_y <= 0):
        raise ValidityError(
            "quantum diffusion tensor lost positivity on the grid; "
            "Lambda is too large for this geometry"
        )
    return 1.0 / den_x, 1.0 / den_y


def _assemble_2d(grid: GridSpec, beta_u: np.ndarray, Dx: np.ndarray,
                 Dy: np.ndarray):
    """Conservative operator on the channel grid: periodic x, no-flux y."""
    Mx, My = grid.Mx, grid.My
    dx, dy = grid.dx, grid.dy
    n = Mx * My
    idx = lambda i, j: i * My + j

    rows, cols, vals = [], [], []

    def add_face(a, b, D_lo, D_hi, b_dU, h):
        theta = _face_theta(D_lo, D_hi, b_dU)
        Df = 0.5 * (D_lo + D_hi)
        c_hi = Df * math.exp(0.5 * theta) / h
        c_lo = Df * math.exp(-0.5 * theta) / h
        rows.extend((a, a, b, b))
        cols.extend((b, a, b, a))
        vals.extend((c_hi / h, -c_lo / h, -c_hi / h, c_lo / h))
        return c_hi, c_lo

    faces = []
    for i in range(Mx):
        i2 = (i + 1) % Mx
        for j in range(My):
            a, b = idx(i, j), idx(i2, j)
            du = beta_u[i2, j] - beta_u[i, j]
            faces.append((a, b) + add_face(a, b, Dx[i, j], Dx[i2, j], du, dx))
    for i in range(Mx):
        for j in range(My - 1):
            a, b = idx(i, j), idx(i, j + 1)
            du = beta_u[i, j + 1] - beta_u[i, j]
            faces.append((a, b) + add_face(a, b, Dy[i, j], Dy[i, j + 1], du, dy))

    M = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    return M, faces


def _face_fluxes(p_flat, faces):
    return np.array([c_hi * p_flat[b] - c_lo * p_flat[a]
                     for a, b, c_hi, c_lo in faces])


def solve_steady_2d(p: ChannelParams, Lambda: float, grid: GridSpec,
                    tol: float = 1e-10, max_steps: int = 400) -> PdeField:
    """Stationary density of the 2D quantum Smoluchowski channel.

    Periodic in x, no-flux at the transverse cutoff.  The marginal of the
    result is directly comparable to the effective-1D equilibrium density.
    """
    X, Y = np.meshgrid(grid.x, grid.y, indexing="ij")
    beta_u = p.beta * potential_eval(p, X, Y)
    Dx, Dy = quantum_diffusion_factors(p, Lambda, grid.x, grid.y)
    M, faces = _assemble_2d(grid, beta_u, Dx, Dy)

    n = grid.n_sites
    cell = grid.dx * grid.dy
    p0 = np.full(n, 1.0 / (n * cell))
    flux0 = float(np.max(np.abs(_face_fluxes(p0, faces))))
    p_ss, steps, drift = _march_to_steady(M, p0, tol=tol, max_steps=max_steps)
    p_ss = p_ss / (p_ss.sum() * cell)
    flux1 = float(np.max(np.abs(_face_fluxes(p_ss, faces))))
    return PdeField(
        x=grid.x, y=grid.y, p=p_ss.reshape(grid.Mx, grid.My),
        Dx=Dx, Dy=Dy, steps=steps, mass_drift=drift,
        max_flux_initial=flux0, max_flux_final=flux1,
    )
