"""Command-line driver.

Subcommands: analytic, equilibrium, transport, pde, sweep, converge, extremum.
Every command reads a flat key = value config (--config) and writes fixed-header
CSV files under --out; see the README for the column contracts.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import fickjacobs as fj
from . import sweep as sw
from .config import params_from_config, parse_config
from .lattice import build_grid
from .model import aspect_ratio, check_validity, derive_scales, params_at_lambda
from .smoluchowski import solve_equilibrium_1d, solve_steady_2d
from .sweep import SweepConfig, locate_extremum, scaling_fit
from .thermal import numeric_barrier


def _parse_grid(text: str):
    try:
        mx, my = text.lower().split("x")
        return int(mx), int(my)
    except Exception:
        raise argparse.ArgumentTypeError(
            f"grid must look like 50x41, got {text!r}") from None


def _load(args):
    cfg = parse_config(args.config)
    p, lam = params_from_config(cfg)
    if lam is None:
        lam = derive_scales(p).Lambda
    if args.grid:
        cfg["Mx"], cfg["My"] = args.grid
    return cfg, p, lam


def _report_validity(p):
    rep = check_validity(p)
    for msg in rep.messages:
        print(f"warning: {msg}", file=sys.stderr)


def cmd_analytic(args):
    cfg, p, lam = _load(args)
    _report_validity(p)
    n = int(cfg.get("samples_x", 257))
    profile = fj.free_energy_profile(p, lam, n)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "profile.csv")
    sw.write_csv(path, ["x", "a0", "f_lambda", "total", "rho"],
                 fj.profile_csv_rows(profile, p))
    print(f"beta*dF = {fj.free_energy_barrier(p, lam):.12g}  (Lambda = {lam:g})")
    print(f"profile written to {path}")
    if "mu1" in cfg and "mu2" in cfg:
        x, rho, flux = fj.steady_state_1d(p, lam, float(cfg["mu1"]), float(cfg["mu2"]))
        spath = os.path.join(args.out, "steady_1d.csv")
        sw.write_csv(spath, ["x", "rho"], zip(x, rho))
        print(f"J_cl/D = {flux.j_cl_over_D:.12g}, J_Lambda = {flux.j_lambda:.12g}, "
              f"J/D = {flux.j_total_over_D:.12g}")
        print(f"steady profile written to {spath}")


def cmd_equilibrium(args):
    cfg, p, lam = _load(args)
    _report_validity(p)
    pl = params_at_lambda(p, lam)
    grid, eig, marg = sw.thermal_point(pl, int(cfg.get("Mx", 50)),
                                       int(cfg.get("My", 41)),
                                       bc=args.bc or str(cfg.get("bc", "periodic")),
                                       Ycut=cfg.get("Ycut"))
    rho_fj = sw.fj_density_on(pl, lam, grid.x, grid.dx)
    sq_rel = (marg.rho - rho_fj) ** 2 / marg.rho**2
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "equilibrium.csv")
    sw.write_csv(path, ["x", "rho_num", "rho_fj", "pointwise_sq_rel_err"],
                 zip(grid.x, marg.rho, rho_fj, sq_rel))
    bar = numeric_barrier(marg, L=p.L)
    print(f"beta*dF_num = {bar.value:.12g} "
          f"(analytic {fj.free_energy_barrier(p, lam):.12g}); "
          f"sigma_mm = {float(np.sum(sq_rel) * grid.dx):.6g}")
    print(f"densities written to {path}")


def cmd_transport(args):
    cfg, p, lam = _load(args)
    _report_validity(p)
    pt = sw.normalized_flux_point(
        p, lam, int(cfg.get("Mx", 24)), int(cfg.get("My", 11)),
        gamma=cfg.get("gamma"), z1=float(cfg.get("z1", 1.5e-3)),
        z2=float(cfg.get("z2", 0.5e-3)), method=str(cfg.get("method", "direct")),
        Ycut=cfg.get("Ycut"),
    )
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "transport.csv")
    sw.write_csv(
        path,
        ["Lambda", "Lx_over_Lomega", "k1", "J_num", "R", "residual",
         "method", "iterations"],
        [(lam, aspect_ratio(p), p.k1, pt["J_num"], pt["fhat"],
          pt["residual"], pt["method"], pt["iterations"])],
    )
    print(f"J_num = {pt['J_num']:.12g} (baseline-normalized {pt['fhat']:.12g}, "
          f"residual {pt['residual']:.3g})")
    print(f"transport row written to {path}")


def cmd_pde(args):
    cfg, p, lam = _load(args)
    _report_validity(p)
    pl = params_at_lambda(p, lam)
    os.makedirs(args.out, exist_ok=True)
    if int(cfg.get("dim", 2)) == 1:
        k = pl.stiffness(0.0) * pl.beta
        y = np.linspace(-6.0 / math.sqrt(k), 6.0 / math.sqrt(k),
                        int(cfg.get("My", 401)))
        res = solve_equilibrium_1d(lambda yy: 0.5 * pl.stiffness(0.0) * yy**2,
                                   lam, pl.beta, y)
        path = os.path.join(args.out, "pde_1d.csv")
        sw.write_csv(path, ["y", "p_closed", "p_steady"],
                     zip(res.y, res.p_closed, res.p_steady))
        print(f"1D steady state after {res.steps} steps "
              f"(mass drift {res.mass_drift:.3g}); written to {path}")
        return
    grid = build_grid(pl, int(cfg.get("Mx", 64)), int(cfg.get("My", 65)),
                      bc_x="periodic", Ycut=cfg.get("Ycut"))
    field = solve_steady_2d(pl, lam, grid)
    rows = [(x, y, field.p[i, j]) for i, x in enumerate(field.x)
            for j, y in enumerate(field.y)]
    path = os.path.join(args.out, "pde_field.csv")
    sw.write_csv(path, ["x", "y", "p"], rows)
    mpath = os.path.join(args.out, "pde_marginal.csv")
    sw.write_csv(mpath, ["x", "rho"], zip(field.x, field.marginal))
    print(f"2D steady state after {field.steps} steps "
          f"(mass drift {field.mass_drift:.3g})")
    print(f"field written to {path}, marginal to {mpath}")


def cmd_sweep(args):
    cfg, p, lam = _load(args)
    samples = cfg.get("samples")
    if samples is None:
        raise SystemExit("sweep config must set 'samples'")
    if not isinstance(samples, tuple):
        samples = (samples,)
    routes = cfg.get("routes", ("analytic",))
    if not isinstance(routes, tuple):
        routes = (routes,)
    scfg = SweepConfig(
        base=p, axis=str(cfg.get("axis", "Lambda")),
        samples=tuple(float(s) for s in samples),
        routes=tuple(str(r) for r in routes),
        Mx=int(cfg.get("Mx", 50)), My=int(cfg.get("My", 41)),
        Ycut=cfg.get("Ycut"), bc=args.bc or str(cfg.get("bc", "periodic")),
        gamma=cfg.get("gamma"), z1=float(cfg.get("z1", 1.5e-3)),
        z2=float(cfg.get("z2", 0.5e-3)), Lambda=lam,
        method=str(cfg.get("method", "direct")),
        out_dir=args.out, workers=args.workers or int(cfg.get("workers", 1)),
    )
    path = sw.run_sweep(scfg)
    print(f"sweep table written to {path}")
    _maybe_figures(scfg, path, args)


def _maybe_figures(scfg, sweep_path, args):
    """Pivot the long-form sweep into per-figure tables and emit plot scripts."""
    if not args.plots:
        return
    rows = _read_csv(sweep_path)
    by_route = {}
    for r in rows:
        by_route.setdefault(r["route"], []).append(r)
    wrote = []
    if {"thermal", "analytic"} <= by_route.keys():
        table = {}
        for r in by_route["thermal"]:
            table.setdefault(r["Lambda"], {})["t"] = r["dF"]
        for r in by_route["analytic"]:
            table.setdefault(r["Lambda"], {})["a"] = r["dF"]
        data = [(lamv, d.get("t", ""), d.get("a", ""))
                for lamv, d in sorted(table.items())]
        sw.write_csv(os.path.join(args.out, "fig2_data.csv"),
                     ["Lambda", "dF_thermal", "dF_analytic"], data)
        wrote.append("barrier_vs_lambda.plt")
    if "redfield" in by_route:
        data = []
        for r in sorted(by_route["redfield"], key=lambda r: float(r["Lambda"])):
            analytic = 1.0 + float(r["Lambda"]) * fj.flux_quantum_factor(
                sw._point_params(scfg, float(r["value"]))[0])
            data.append((r["Lambda"], r["flux_ratio"], analytic))
        sw.write_csv(os.path.join(args.out, "fig5_data.csv"),
                     ["Lambda", "flux_ratio", "flux_ratio_analytic"], data)
        wrote.append("flux_vs_lambda.plt")
    if wrote:
        sw.emit_plot_scripts(args.out, wrote)
        print(f"plot scripts: {', '.join(wrote)}")


def _read_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        out = []
        for line in fh:
            parts = line.rstrip("\n").split(",")
            row = dict(zip(header, parts))
            for k in ("Lambda", "value", "dF", "flux_ratio"):
                if k in row and row[k]:
                    row[k] = float(row[k])
            out.append(row)
    return out


def cmd_converge(args):
    cfg, p, lam = _load(args)
    ladder = cfg.get("N_ladder", (10, 20, 50, 100))
    if not isinstance(ladder, tuple):
        ladder = (ladder,)
    table = sw.convergence_study(p, lam, [int(n) for n in ladder],
                                 My=int(cfg.get("My", 31)))
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "convergence.csv")
    sw.write_csv(path, ["N", "sigma_mm"], table)
    for n, s in table:
        print(f"N = {n:4d}  sigma_mm = {s:.6g}")
    print(f"convergence table written to {path}")


def cmd_extremum(args):
    all_points = []
    for path in args.csv:
        rows = [r for r in _read_csv(path)
                if r.get("route", "thermal") in (args.route, "", None)
                or "route" not in r]
        rows = [r for r in rows if r.get(args.column) not in ("", None)]
        lams = [float(r["Lambda"]) for r in rows]
        vals = [float(r[args.column]) for r in rows]
        order = np.argsort(lams)
        lams = list(np.asarray(lams)[order])
        vals = list(np.asarray(vals)[order])
        try:
            res = locate_extremum(lams, vals, kind=args.kind)
        except ValueError as exc:
            print(f"{path}: {exc}")
            continue
        ratio = rows[0].get("Lx_over_Lomega")
        print(f"{path}: Lambda_M = {res.Lambda_M:.6g} +- {res.stderr:.2g} "
              f"(value {res.value:.6g}, window {res.window})")
        if ratio:
            all_points.append((float(ratio) ** 2, res.Lambda_M))
    if len(all_points) >= 3:
        fit = scaling_fit([a for a, _ in all_points], [b for _, b in all_points])
        print(f"scaling fit Lambda_M vs Lx^2/Lomega^2: slope {fit.slope:.6g}, "
              f"intercept {fit.intercept:.6g}, R^2 {fit.r2:.4f}, "
              f"monotone {fit.monotone}")
        sw.write_csv(os.path.join(args.out, "fig3_data.csv"),
                     ["Lx2_over_Lomega2", "Lambda_M"], all_points)


def main(argv=None):
    ap = argparse.ArgumentParser(
        prog="qchan",
        description="Quantum transport across entropic barriers in a "
                    "corrugated 2D channel",
    )
    ap.add_argument("--out", default=".", help="output directory")
    ap.add_argument("--workers", type=int, default=None,
                    help="concurrent sweep points")
    ap.add_argument("--grid", type=_parse_grid, default=None,
                    help="grid as MxxMy, e.g. 50x41")
    ap.add_argument("--bc", choices=("periodic", "open"), default=None)
    sub = ap.add_subparsers(dest="command", required=True)

    for name, fn, needs_cfg in (
        ("analytic", cmd_analytic, True),
        ("equilibrium", cmd_equilibrium, True),
        ("transport", cmd_transport, True),
        ("pde", cmd_pde, True),
        ("sweep", cmd_sweep, True),
        ("converge", cmd_converge, True),
    ):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=needs_cfg)
        sp.add_argument("--plots", action="store_true",
                        help="emit figure tables and gnuplot scripts")
        sp.set_defaults(fn=fn)

    spx = sub.add_parser("extremum")
    spx.add_argument("csv", nargs="+", help="sweep CSV file(s)")
    spx.add_argument("--column", default="dF")
    spx.add_argument("--route", default="thermal")
    spx.add_argument("--kind", choices=("max", "min"), default="max")
    spx.set_defaults(fn=cmd_extremum)

    args = ap.parse_args(argv)
    args.fn(args)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
