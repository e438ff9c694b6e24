"""Sweep driver: runs the analytic/thermal/redfield/pde routes over parameter
grids, locates barrier extrema, fits scaling laws, and writes reproducible CSV
tables plus plot scripts.

Determinism contract: identical configuration produces byte-identical CSV
(floats at 17 significant digits, fixed row ordering, newline-terminated).
Completed points are cached on disk keyed by a parameter hash, so an
interrupted sweep resumes without recomputation.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import fickjacobs as fj
from . import redfield as rf
from .lattice import (GridSpec, assemble_hamiltonian, build_grid, diagonalize,
                      spectrum_cache_key)
from .model import (ChannelParams, aspect_ratio, derive_scales, params_at_lambda)
from .smoluchowski import solve_steady_2d
from .thermal import (edge_row_fraction, mismatch_score, numeric_barrier,
                      thermal_marginal)

FLOAT_FMT = "%.17g"


def fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, float):
        return FLOAT_FMT % v
    return str(v)


# ---------------------------------------------------------------------------
# spectrum cache (in memory; the Hamiltonian does not depend on temperature,
# so one diagonalization serves a whole Lambda sweep)

_SPECTRA: dict = {}
_SPECTRA_CAP = 6


def cached_spectrum(p: ChannelParams, grid: GridSpec):
    key = spectrum_cache_key(p, grid)
    if key not in _SPECTRA:
        if len(_SPECTRA) >= _SPECTRA_CAP:
            _SPECTRA.pop(next(iter(_SPECTRA)))
        H = assemble_hamiltonian(grid, p)
        _SPECTRA[key] = diagonalize(H)
    return _SPECTRA[key]


# ---------------------------------------------------------------------------
# route runners


def thermal_point(p: ChannelParams, Mx: int, My: int, bc: str = "periodic",
                  Ycut: float | None = None, edge_tol: float = 1e-6,
                  max_doublings: int = 3):
    """Thermal marginal with the transverse cutoff doubled until the density
    at the edge rows is negligible.  Returns (grid, eig, marginal)."""
    ycut = Ycut
    for _ in range(max_doublings + 1):
        grid = build_grid(p, Mx, My, bc_x=bc, Ycut=ycut)
        eig = cached_spectrum(p, grid)
        if edge_row_fraction(eig, p.beta, grid) < edge_tol:
            return grid, eig, thermal_marginal(eig, p.beta, grid)
        ycut = 2.0 * grid.Ycut
    warnings.warn("transverse cutoff still marginal after doubling; "
                  "proceeding with the widest grid", UserWarning)
    return grid, eig, thermal_marginal(eig, p.beta, grid)


def thermal_barrier(p: ChannelParams, Lambda: float, Mx: int, My: int,
                    bc: str = "periodic", Ycut: float | None = None) -> float:
    pl = params_at_lambda(p, Lambda)
    _, _, marg = thermal_point(pl, Mx, My, bc, Ycut)
    return numeric_barrier(marg, L=p.L).value


def normalized_flux_point(p: ChannelParams, Lambda: float, Mx: int, My: int,
                          gamma: float | None = None, z1: float = 1.5e-3,
                          z2: float = 0.5e-3, method: str = "direct",
                          Ycut: float | None = None):
    """One Redfield steady-state point at fixed fugacities.

    Returns a dict with the raw current J (particles per time into the system
    from the left lead), the classical-baseline-normalized flux fhat, and
    solver diagnostics.  fhat strips the trivial thermal-wavelength and
    boundary-layer drifts, so across a Lambda sweep fhat(Lambda)/fhat(ref)
    is directly comparable to the effective-1D factor 1 + Lambda J_Lambda.
    """
    pl = params_at_lambda(p, Lambda)
    if gamma is None:
        gamma = 1e-3 * pl.hbar * derive_scales(pl).omega
    grid = build_grid(pl, Mx, My, bc_x="open", Ycut=Ycut)
    eig = cached_spectrum(pl, grid)
    H = assemble_hamiltonian(grid, pl)
    leads = [
        rf.LeadSpec(side="left", mu=math.log(z1) / pl.beta, gamma=gamma, beta=pl.beta),
        rf.LeadSpec(side="right", mu=math.log(z2) / pl.beta, gamma=gamma, beta=pl.beta),
    ]
    res = rf.steady_state(H, grid, eig, leads, method=method, hbar=pl.hbar)
    J = rf.lead_current(res, "left")
    baseline = rf.classical_edge_weight(pl, grid)
    fhat = J * pl.hbar / (gamma * (z1 - z2) * baseline)
    return {
        "J_num": J,
        "fhat": fhat,
        "residual": res.residual,
        "iterations": res.iterations,
        "method": res.method,
        "grid": grid,
        "eig": eig,
        "result": res,
    }


def pde_barrier(p: ChannelParams, Lambda: float, Mx: int, My: int,
                Ycut: float | None = None) -> float:
    pl = params_at_lambda(p, Lambda)
    grid = build_grid(pl, Mx, My, bc_x="periodic", Ycut=Ycut)
    field = solve_steady_2d(pl, Lambda, grid)
    marg = field.marginal
    return float(np.log(marg.max() / marg.min()))


def fj_density_on(p: ChannelParams, Lambda: float, x: np.ndarray,
                  dx: float) -> np.ndarray:
    """Effective-1D first-order density normalized to unit mass on the grid
    columns, for like-for-like comparison with a thermal marginal."""
    rho = fj.equilibrium_density(p, Lambda, x)
    return rho / (rho.sum() * dx)


# ---------------------------------------------------------------------------
# extremum location and scaling fits


@dataclass(frozen=True)
class ExtremumResult:
    Lambda_M: float
    value: float
    kind: str                  # "max" | "min"
    window: tuple              # (lo, hi) of the 5-point fit bracket
    fit_rmse: float
    stderr: float              # 1-sigma uncertainty of the vertex location


class NoInteriorExtremum(ValueError):
    pass


def locate_extremum(lams, values, kind: str = "max") -> ExtremumResult:
    """Vertex of a parabola through the 5 samples bracketing the discrete
    extremum.  Raises NoInteriorExtremum when the extremum sits on the
    boundary of the sampled range."""
    lams = np.asarray(lams, dtype=float)
    vals = np.asarray(values, dtype=float)
    if lams.size < 5:
        raise ValueError("need at least 5 samples to bracket an extremum")
    if kind not in ("max", "min"):
        raise ValueError("kind must be 'max' or 'min'")
    i0 = int(np.argmax(vals) if kind == "max" else np.argmin(vals))
    if i0 == 0 or i0 == lams.size - 1:
        raise NoInteriorExtremum(
            f"no interior extremum: discrete {kind} sits on the boundary "
            f"(Lambda = {lams[i0]:.6g})"
        )
    lo = min(max(i0 - 2, 0), lams.size - 5)
    sl = slice(lo, lo + 5)
    x, y = lams[sl], vals[sl]

    X = np.vander(x, 3)                      # columns x^2, x, 1
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    a, b, _ = coef
    if (kind == "max" and a >= 0) or (kind == "min" and a <= 0):
        raise NoInteriorExtremum("bracketing parabola has the wrong curvature")
    vertex = -b / (2.0 * a)
    if not (lams[0] < vertex < lams[-1]):
        raise NoInteriorExtremum(
            f"parabola vertex {vertex:.6g} falls outside the sampled range"
        )
    resid = y - X @ coef
    dof = max(x.size - 3, 1)
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(X.T @ X)
    grad = np.array([b / (2.0 * a * a), -1.0 / (2.0 * a), 0.0])
    stderr = float(np.sqrt(max(grad @ cov @ grad, 0.0)))
    return ExtremumResult(
        Lambda_M=float(vertex),
        value=float(np.polyval(coef, vertex)),
        kind=kind,
        window=(float(x[0]), float(x[-1])),
        fit_rmse=float(np.sqrt(s2)),
        stderr=stderr,
    )


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    r2: float
    monotone: bool


def scaling_fit(x, y) -> SlopeFit:
    """Least-squares line through (x, y) with a monotonicity flag."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3:
        raise ValueError("need at least 3 points for a scaling fit")
    if np.ptp(x) == 0:
        raise ValueError("degenerate abscissae: all x identical")
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    dy = np.diff(y[np.argsort(x)])
    monotone = bool(np.all(dy > 0) or np.all(dy < 0))
    return SlopeFit(slope=float(slope), intercept=float(intercept),
                    r2=r2, monotone=monotone)


def convergence_study(p: ChannelParams, Lambda: float, n_ladder,
                      My: int = 31, bc: str = "periodic"):
    """sigma_mm between the thermal marginal and the effective-1D density for
    a ladder of x resolutions.  Returns a list of (N, sigma_mm)."""
    pl = params_at_lambda(p, Lambda)
    out = []
    for N in n_ladder:
        grid, _, marg = thermal_point(pl, int(N), My, bc)
        rho_fj = fj_density_on(pl, Lambda, grid.x, grid.dx)
        out.append((int(N), mismatch_score(rho_fj, marg.rho, grid.dx)))
    return out


# ---------------------------------------------------------------------------
# sweep configuration and driver


ROUTES = ("analytic", "thermal", "redfield", "pde")


@dataclass
class SweepConfig:
    base: ChannelParams
    axis: str                       # "Lambda" | "geometry" | "k1"
    samples: tuple
    routes: tuple
    Mx: int = 50
    My: int = 41
    Ycut: float | None = None
    bc: str = "periodic"
    gamma: float | None = None
    z1: float = 1.5e-3
    z2: float = 0.5e-3
    Lambda: float | None = None     # fixed Lambda for geometry/k1 axes
    method: str = "direct"
    out_dir: str = "."
    workers: int = 1

    def __post_init__(self):
        if self.axis not in ("Lambda", "geometry", "k1"):
            raise ValueError(f"unknown sweep axis {self.axis!r}")
        if not self.samples:
            raise ValueError("sample list must be non-empty")
        if any(b <= a for a, b in zip(self.samples, self.samples[1:])):
            raise ValueError("sample list must be strictly increasing")
        if not self.routes:
            raise ValueError("route list must be non-empty")
        for r in self.routes:
            if r not in ROUTES:
                raise ValueError(f"unknown route {r!r}; choose from {ROUTES}")


SWEEP_HEADER = "axis,value,route,Lambda,k0,k1,Lx_over_Lomega,dF,flux_ratio,error"


def _point_params(cfg: SweepConfig, value: float):
    """ChannelParams and Lambda for one sweep point."""
    from dataclasses import replace

    from .model import k0_from_aspect

    if cfg.axis == "Lambda":
        return cfg.base, float(value)
    lam = cfg.Lambda if cfg.Lambda is not None else 0.05
    if cfg.axis == "geometry":
        k0 = k0_from_aspect(float(value), cfg.base.L, cfg.base.hbar, cfg.base.mass)
        return replace(cfg.base, k0=k0), lam
    return replace(cfg.base, k1=float(value)), lam


def _run_point(cfg: SweepConfig, value: float, route: str):
    p, lam = _point_params(cfg, value)
    row = {
        "axis": cfg.axis, "value": value, "route": route, "Lambda": lam,
        "k0": p.k0, "k1": p.k1, "Lx_over_Lomega": aspect_ratio(p),
        "dF": math.nan, "flux_ratio": math.nan, "error": "",
    }
    try:
        if route == "analytic":
            row["dF"] = fj.free_energy_barrier(p, lam)
            row["flux_ratio"] = 1.0 + lam * fj.flux_quantum_factor(p)
        elif route == "thermal":
            row["dF"] = thermal_barrier(p, lam, cfg.Mx, cfg.My, cfg.bc, cfg.Ycut)
        elif route == "redfield":
            pt = normalized_flux_point(p, lam, cfg.Mx, cfg.My, cfg.gamma,
                                       cfg.z1, cfg.z2, cfg.method, cfg.Ycut)
            # raw baseline-normalized flux; rescaled to the sweep's first
            # redfield row when the CSV is written
            row["flux_ratio"] = pt["fhat"]
        elif route == "pde":
            row["dF"] = pde_barrier(p, lam, cfg.Mx, cfg.My, cfg.Ycut)
    except Exception as exc:  # per-point failures recorded, sweep continues
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def _cache_key(cfg: SweepConfig, value: float, route: str) -> str:
    p, lam = _point_params(cfg, value)
    payload = json.dumps([
        route, lam, p.k0, p.k1, p.L, p.hbar, p.mass, cfg.Mx, cfg.My, cfg.Ycut,
        cfg.bc, cfg.gamma, cfg.z1, cfg.z2, cfg.method,
    ], sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:32]


def run_sweep(cfg: SweepConfig, csv_name: str = "sweep.csv") -> str:
    """Run all (point, route) combinations and write one deterministic CSV.

    Rows are cached on disk under <out>/.cache; a rerun with the same config
    reuses completed rows (resumability) and rewrites the identical CSV.
    """
    os.makedirs(cfg.out_dir, exist_ok=True)
    cache_dir = os.path.join(cfg.out_dir, ".cache")
    os.makedirs(cache_dir, exist_ok=True)

    tasks = [(v, r) for v in cfg.samples for r in cfg.routes]
    rows: list = [None] * len(tasks)

    def work(idx_task):
        idx, (value, route) = idx_task
        key = os.path.join(cache_dir, _cache_key(cfg, value, route) + ".json")
        if os.path.exists(key):
            with open(key) as fh:
                return idx, json.load(fh)
        row = _run_point(cfg, value, route)
        with open(key, "w") as fh:
            json.dump(row, fh)
        return idx, row

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            for idx, row in pool.map(work, enumerate(tasks)):
                rows[idx] = row
    else:
        for item in enumerate(tasks):
            idx, row = work(item)
            rows[idx] = row

    # normalize redfield flux to the sweep's first converged redfield row
    fhat_ref = next((r["flux_ratio"] for r in rows
                     if r["route"] == "redfield" and not r["error"]
                     and r["flux_ratio"] is not None), None)
    if fhat_ref:
        for r in rows:
            if r["route"] == "redfield" and not r["error"] and r["flux_ratio"]:
                r["flux_ratio"] = r["flux_ratio"] / fhat_ref

    path = os.path.join(cfg.out_dir, csv_name)
    with open(path, "w", newline="\n") as fh:
        fh.write(SWEEP_HEADER + "\n")
        for row in rows:
            fh.write(",".join(fmt(row[c]) for c in
                              ("axis", "value", "route", "Lambda", "k0", "k1",
                               "Lx_over_Lomega", "dF", "flux_ratio", "error")) + "\n")
    return path


# ---------------------------------------------------------------------------
# figure tables and plot scripts


def write_csv(path: str, header: list, rows) -> str:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")
    return path


_PLOT_SCRIPTS = {
    "barrier_vs_lambda.plt": (
        "fig2_data.csv", ("Lambda", "dF_thermal", "dF_analytic"),
        """# Free-energy barrier against the quantum parameter
set datafile separator ','
set xlabel 'Lambda'
set ylabel 'beta dF'
plot 'fig2_data.csv' using 1:2 with linespoints title 'lattice thermal', \\
     'fig2_data.csv' using 1:3 with lines title 'effective 1D'
""",
    ),
    "lambda_max_scaling.plt": (
        "fig3_data.csv", ("Lx2_over_Lomega2", "Lambda_M"),
        """# Location of the barrier maximum against the squared aspect ratio
set datafile separator ','
set xlabel 'Lx^2 / Lomega^2'
set ylabel 'Lambda_M'
plot 'fig3_data.csv' using 1:2 with points pt 7 title 'Lambda_M'
""",
    ),
    "flux_vs_lambda.plt": (
        "fig5_data.csv", ("Lambda", "flux_ratio"),
        """# Normalized steady flux against the quantum parameter
set datafile separator ','
set xlabel 'Lambda'
set ylabel 'J / J_ref'
plot 'fig5_data.csv' using 1:2 with linespoints title 'redfield', \\
     'fig5_data.csv' using 1:3 with lines title 'effective 1D'
""",
    ),
}


def emit_plot_scripts(out_dir: str, names=None) -> list:
    """Write textual gnuplot scripts next to the figure tables they reference.

    A script is only written when its CSV exists and carries the expected
    columns; running the scripts is optional and external.
    """
    written = []
    for name, (csv_name, cols, body) in _PLOT_SCRIPTS.items():
        if names is not None and name not in names:
            continue
        csv_path = os.path.join(out_dir, csv_name)
        if not os.path.exists(csv_path):
            raise FileNotFoundError(f"{csv_name} not found in {out_dir}")
        with open(csv_path) as fh:
            header = fh.readline().strip().split(",")
        missing = [c for c in cols if c not in header]
        if missing:
            raise ValueError(f"{csv_name} lacks required columns {missing}")
        path = os.path.join(out_dir, name)
        with open(path, "w", newline="\n") as fh:
            fh.write(body)
        written.append(path)
    return written
