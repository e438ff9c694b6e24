"""Discretized single-particle Hamiltonian of the channel.

Sites live on a rectangular grid x_i = dx (i - 1/2), i = 1..Mx and
y_j = dy j with j symmetric about 0 (odd My).  The Hamiltonian is the
standard five-point tight-binding form

    onsite   2 Jx + 2 Jy + U(x_i, y_j)
    hopping  -Jx between x neighbors (wrapping iff periodic)
             -Jy between y neighbors (hard wall at the cutoff)

with Jx = hbar^2 / (2 m dx^2) and Jy likewise.  Site flattening is x-major:
site(i, j) = i * My + jj with jj = j + (My - 1)/2.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .model import ChannelParams, derive_scales, potential_eval

#: Dense full-spectrum diagonalization is refused above this size; the bath
#: coefficients need every eigenpair, so there is no sparse shortcut.
MAX_DENSE = 4096


@dataclass(frozen=True)
class GridSpec:
    """Discretization geometry. Construct via build_grid for validated defaults."""

    Mx: int
    My: int
    L: float
    Ycut: float
    bc_x: str = "periodic"   # "periodic" | "open"

    def __post_init__(self):
        if self.Mx < 1 or self.My < 1:
            raise ValueError("grid needs at least one site per direction")
        if self.bc_x not in ("periodic", "open"):
            raise ValueError(f"bc_x must be 'periodic' or 'open', got {self.bc_x!r}")

    @property
    def dx(self) -> float:
        return self.L / self.Mx

    @property
    def dy(self) -> float:
        return 2.0 * self.Ycut / self.My

    @property
    def n_sites(self) -> int:
        return self.Mx * self.My

    @property
    def x(self) -> np.ndarray:
        return self.dx * (np.arange(1, self.Mx + 1) - 0.5)

    @property
    def y(self) -> np.ndarray:
        half = (self.My - 1) // 2
        return self.dy * np.arange(-half, self.My - half)

    def site(self, i: int, jj: int) -> int:
        """Flat index of x-column i (0-based) and y-row jj (0-based)."""
        return i * self.My + jj

    def column_sites(self, i: int) -> np.ndarray:
        return np.arange(i * self.My, (i + 1) * self.My)

    def key(self) -> str:
        """Stable hash of the geometry, used for spectrum caching."""
        payload = f"{self.Mx},{self.My},{self.L!r},{self.Ycut!r},{self.bc_x}"
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def build_grid(p: ChannelParams, Mx: int, My: int, bc_x: str = "periodic",
               Ycut: float | None = None) -> GridSpec:
    """Validated grid with an automatic transverse cutoff.

    The default cutoff 4 max(L_y, L_omega) keeps both the thermal and the
    zero-point tails of the density below ~1e-6 of the peak; callers may
    override with anything down to 2 L_y (rejected below that).
    """
    if Mx < 2:
        raise ValueError("Mx must be at least 2")
    if My < 3 or My % 2 == 0:
        raise ValueError("My must be an odd number >= 3 (symmetric about y = 0)")
    s = derive_scales(p)
    if Ycut is None:
        Ycut = 4.0 * max(s.L_y, s.L_omega)
    elif Ycut < 2.0 * s.L_y:
        raise ValueError(
            f"Ycut override {Ycut:.4g} is below 2 L_y = {2 * s.L_y:.4g}; "
            "the transverse box would clip the thermal density"
        )
    return GridSpec(Mx=Mx, My=My, L=p.L, Ycut=Ycut, bc_x=bc_x)


def hopping_energies(g: GridSpec, hbar: float = 1.0, mass: float = 1.0):
    Jx = hbar**2 / (2.0 * mass * g.dx**2)
    Jy = hbar**2 / (2.0 * mass * g.dy**2)
    return Jx, Jy


def assemble_hamiltonian(g: GridSpec, p: ChannelParams,
                         potential=None) -> sp.csr_matrix:
    """Real symmetric tight-binding Hamiltonian on the grid (sparse CSR).

    ``potential`` defaults to the channel potential of ``p``; pass any
    callable (x, y) -> energy to discretize a different confinement (used by
    the 1D enthalpic study and the quartic test potential).
    """
    if potential is None:
        potential = lambda x, y: potential_eval(p, x, y)
    Jx, Jy = hopping_energies(g, p.hbar, p.mass)
    X, Y = np.meshgrid(g.x, g.y, indexing="ij")
    onsite = 2.0 * Jx + 2.0 * Jy + np.asarray(potential(X, Y), dtype=float)

    n = g.n_sites
    H = sp.lil_matrix((n, n))
    H.setdiag(onsite.ravel())

    for i in range(g.Mx):
        i2 = i + 1
        if i2 == g.Mx:
            if g.bc_x != "periodic":
                continue
            i2 = 0
        for jj in range(g.My):
            a, b = g.site(i, jj), g.site(i2, jj)
            H[a, b] += -Jx
            H[b, a] += -Jx
    for i in range(g.Mx):
        for jj in range(g.My - 1):
            a, b = g.site(i, jj), g.site(i, jj + 1)
            H[a, b] += -Jy
            H[b, a] += -Jy
    return H.tocsr()


@dataclass(frozen=True)
class SpectralDecomposition:
    """Full real spectrum: energies ascending, modes orthonormal in columns."""

    energies: np.ndarray          # (n,)
    modes: np.ndarray             # (n_sites, n) columns are eigenvectors

    @property
    def n(self) -> int:
        return self.energies.size


def diagonalize(H) -> SpectralDecomposition:
    """Dense full-spectrum diagonalization of the (sparse or dense) Hamiltonian."""
    n = H.shape[0]
    if n > MAX_DENSE:
        raise ValueError(
            f"matrix dimension {n} exceeds the dense-eigensolver limit {MAX_DENSE}; "
            "reduce the grid (bath sums need the full spectrum, so sparse "
            "iterative eigensolvers are not an option)"
        )
    A = H.toarray() if sp.issparse(H) else np.asarray(H, dtype=float)
    asym = np.max(np.abs(A - A.T))
    if asym > 1e-12 * max(1.0, np.max(np.abs(A))):
        raise ValueError(f"Hamiltonian is not symmetric (max asymmetry {asym:.3g})")
    try:
        energies, modes = scipy.linalg.eigh(A)
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise RuntimeError(
            "eigensolver failed to converge: "
            f"dim={n}, |H|_max={np.max(np.abs(A)):.3g}, "
            f"diag range [{A.diagonal().min():.3g}, {A.diagonal().max():.3g}]"
        ) from exc
    return SpectralDecomposition(energies=energies, modes=modes)


def chain_hamiltonian(Mx: int, L: float, potential_1d, hbar: float = 1.0,
                      mass: float = 1.0, bc_x: str = "periodic") -> sp.csr_matrix:
    """Strictly 1D chain along x with onsite potential_1d(x) (no transverse row).

    Used for the purely enthalpic cosine-potential study.
    """
    dx = L / Mx
    x = dx * (np.arange(1, Mx + 1) - 0.5)
    Jx = hbar**2 / (2.0 * mass * dx**2)
    onsite = 2.0 * Jx + np.asarray(potential_1d(x), dtype=float)
    H = sp.lil_matrix((Mx, Mx))
    H.setdiag(onsite)
    for i in range(Mx - 1):
        H[i, i + 1] = -Jx
        H[i + 1, i] = -Jx
    if bc_x == "periodic" and Mx > 2:
        H[0, Mx - 1] += -Jx
        H[Mx - 1, 0] += -Jx
    elif bc_x == "periodic" and Mx == 2:
        H[0, 1] += -Jx
        H[1, 0] += -Jx
    return H.tocsr()


def spectrum_cache_key(p: ChannelParams, g: GridSpec) -> str:
    """Hash over everything the spectrum depends on (beta excluded: H is
    temperature-independent)."""
    payload = f"{p.k0!r},{p.k1!r},{p.L!r},{p.hbar!r},{p.mass!r}|{g.key()}"
    return hashlib.sha256(payload.encode()).hexdigest()[:24]


def save_spectrum(path, eig: SpectralDecomposition):
    np.savez_compressed(path, energies=eig.energies, modes=eig.modes)


def load_spectrum(path) -> SpectralDecomposition:
    data = np.load(path)
    return SpectralDecomposition(energies=data["energies"], modes=data["modes"])
