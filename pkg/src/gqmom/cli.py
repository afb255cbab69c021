"""Command-line front end.

Subcommands: invert, riemann, turb2d, audit, appendix-check.  Options may
be preloaded from a JSON config file (--config); explicit flags win.  Every
output file embeds the resolved configuration in its header.

Exit codes: 0 success, 2 usage error, 3 realizability violation,
4 numerical failure / failed audit.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from . import io as gio
from .cases import riemann as rcase
from .cases import turbulence as tcase
from .ecqmom2d import INDEX_2D
from .eqmom1d import LimiterConfig, evaluate_moments, invert_two_node
from .errors import ConfigError, RealizabilityError, StepError
from .kinetic_flux import verify_conjecture_c
from .moments import central_invariants, hankel_realizable
from .solver import (hyperbolicity_audit_1d, hyperbolicity_audit_2d,
                     realizability_sweep, run_1d, sample_omega_moments)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_REALIZABILITY = 3
EXIT_NUMERICAL = 4


def _apply_config_file(args, parser):
    """Fill parser defaults from a JSON file; explicit flags keep priority."""
    if not getattr(args, "config", None):
        return args
    try:
        with open(args.config) as fp:
            values = json.load(fp)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}")
    known = vars(args)
    for key, val in values.items():
        dest = key.replace("-", "_")
        if dest not in known:
            raise ConfigError(f"unknown config key {key!r}")
        if f"--{key.replace('_', '-')}" not in sys.argv and dest != "config":
            setattr(args, dest, val)
    return args


def _resolved_config(args, skip=("func", "config")):
    return {k: v for k, v in sorted(vars(args).items())
            if k not in skip and not k.startswith("_")}


def cmd_invert(args):
    if args.file:
        m = np.loadtxt(args.file, dtype=float).ravel()
    else:
        m = np.array([float(tok) for tok in args.moments], dtype=float)
    if len(m) < 5 or len(m) % 2 == 0:
        print("error: need an odd number (>= 5) of moments", file=sys.stderr)
        return EXIT_USAGE
    report = hankel_realizable(m)
    print(f"hankel: {'ok' if report.ok else 'FAIL'}"
          + ("" if report.ok else
             f" (order {report.order}, determinant {report.value:.6e})"))
    if not report.ok:
        print("unrealizable moment vector", file=sys.stderr)
        return EXIT_REALIZABILITY
    cfg = None
    if args.du_lim is not None and args.du_max is not None:
        cfg = LimiterConfig(args.du_lim, args.du_max)
    p = invert_two_node(m, cfg)
    if p.mode != "vacuum":
        inv = central_invariants(m)
        in_omega = p.fallback is None and p.mode in ("two-node", "single-node")
        print(f"omega-membership: {in_omega}")
        print(f"e={inv.e:.17g} q={inv.q:.17g} eta={inv.eta:.17g}")
    print(f"mode: {p.mode}" + (f" (fallback: {p.fallback})" if p.fallback else "")
          + (" [limited]" if p.limited else ""))
    print(f"rho = {p.rho[0]:.17g} {p.rho[1]:.17g}")
    print(f"v   = {p.v[0]:.17g} {p.v[1]:.17g}")
    print(f"sigma2 = {p.sigma**2:.17g}")
    rec = evaluate_moments(p, 4)
    print("reconstructed M0..M4:", " ".join("%.17g" % v for v in rec))
    return EXIT_OK


def cmd_riemann(args):
    os.makedirs(args.outdir, exist_ok=True)
    state = rcase.riemann_setup(ncells=args.ncells)
    config = _resolved_config(args)
    snapshots = sorted(set(args.snapshots + [args.tend]))

    def write(s):
        diag = rcase.riemann_diagnostics(s, args.du_lim, args.du_max)
        cols = {
            "x": diag["x"], "M0": diag["M0"], "M1": diag["M1"],
            "M2": diag["M2"], "M3": diag["M3"], "M4": diag["M4"],
            "M5bar": diag["M5bar"], "rho1": diag["rho1"],
            "rho2": diag["rho2"], "v1": diag["v1"], "v2": diag["v2"],
            "sigma2": diag["sigma2"], "sig2_over_e": diag["sig2_over_e"],
            "estar": diag["estar"], "qstar": diag["qstar"],
            "etastar": diag["etastar"], "limited_flag": diag["limited"],
        }
        path = os.path.join(args.outdir, f"riemann_t{s.t:.6f}.csv")
        gio.write_csv(path, cols, config=dict(config, t=s.t))
        print(f"wrote {path}")

    if any(abs(s) < 1e-12 for s in snapshots):
        write(state)
    run_1d(state, args.tend, cfl_number=args.cfl, du_lim=args.du_lim,
           du_max=args.du_max, snapshot_times=snapshots, on_snapshot=write,
           check_realizable=args.check_realizability,
           high_order=args.high_order)
    return EXIT_OK


def cmd_turb2d(args):
    os.makedirs(args.outdir, exist_ok=True)
    cfg = tcase.TurbulenceConfig(
        nx=args.nx, seed=args.seed, particle_seed=args.particle_seed,
        n_particles=args.particles, st_values=tuple(args.st),
        t_end=args.tend, cfl_number=args.cfl, high_order=not args.first_order)
    flow = cfg.build_flow()
    config = dict(_resolved_config(args), t_eta=flow.t_eta, u_rms=flow.u_rms)
    print(f"frozen flow: t_eta={flow.t_eta:.6g}  u_rms={flow.u_rms:.6g}  "
          f"divergence={flow.max_divergence():.3e}")
    centers, _ = flow.cell_centers()
    xx, yy = np.meshgrid(centers, centers, indexing="ij")
    grid_cols = {"x": xx.ravel(), "y": yy.ravel()}
    for st in cfg.st_values:
        res = tcase.run_comparison_case(cfg, flow, st)
        tag = f"St{st:g}"
        for label, field in (("eul", res["state"].moments),
                             ("lag", res["projected"])):
            cols = dict(grid_cols)
            if args.all_moments:
                for k, (i, j) in enumerate(INDEX_2D):
                    cols[f"M{i}{j}"] = field[:, :, k].ravel()
            else:
                cols["M00"] = field[:, :, 0].ravel()
            path = os.path.join(args.outdir, f"turb2d_{tag}_{label}.csv")
            gio.write_csv(path, cols, config=dict(config, st=st, field=label))
            if args.vtk:
                vtk_path = path[:-4] + ".vtk"
                gio.write_vtk_structured_points(
                    vtk_path, {"M00": field[:, :, 0]},
                    origin=(centers[0], centers[0]),
                    spacing=(flow.dx, flow.dx))
        seg_cols = {
            "t": [t for t, _ in res["seg_eul_series"]],
            "seg_eulerian": [s for _, s in res["seg_eul_series"]],
            "seg_lagrangian": [s for _, s in res["seg_lag_series"]],
        }
        gio.write_csv(os.path.join(args.outdir, f"turb2d_{tag}_segregation.csv"),
                      seg_cols, config=dict(config, st=st))
        print(f"{tag}: seg_lag={res['seg_lag']:.4f} seg_eul={res['seg_eul']:.4f} "
              f"corr={res['correlation']:.4f}")
    return EXIT_OK


def cmd_audit(args):
    rng = np.random.default_rng(args.seed)
    failures = []

    samples = sample_omega_moments(rng, args.samples)
    worst_imag = 0.0
    worst_gap = math.inf
    for row in samples:
        rep = hyperbolicity_audit_1d(row)
        worst_imag = max(worst_imag, rep.max_imag_rel)
        worst_gap = min(worst_gap, rep.min_gap_rel)
    ok = worst_imag <= 1e-8 and worst_gap > 1e-8
    print(f"hyperbolicity-1d: {args.samples} samples, max |Im|/scale = "
          f"{worst_imag:.3e}, min gap/scale = {worst_gap:.3e} -> "
          f"{'ok' if ok else 'FAIL'}")
    if not ok:
        failures.append("hyperbolicity-1d")

    worst_2d = 0.0
    n2d = max(args.samples // 10, 100)
    from .ecqmom2d import BivariateMoments, Ecqmom2DParams, evaluate_all_2d
    # Random nondegenerate parameter sets exercise the block eigenstructure.
    for _ in range(n2d):
        rho = rng.uniform(0.2, 2.0, 2)
        u = np.sort(rng.uniform(-2.0, 2.0, 2))
        u[1] = max(u[1], u[0] + 0.4)
        s1 = rng.uniform(0.1, 1.0)
        w = rng.uniform(0.3, 0.7)
        dv = rng.uniform(0.5, 1.5)
        inner_v = np.array([-(1 - w) * dv, w * dv])
        p = Ecqmom2DParams(rho=rho, u=u, sigma1=s1, a0=0.0, a1=0.0,
                           rho_in=np.array([[w, 1 - w], [w, 1 - w]]),
                           v_in=np.array([inner_v, inner_v]),
                           sigma2=rng.uniform(0.1, 0.8, 2))
        m16 = BivariateMoments(evaluate_all_2d(p))
        rep2 = hyperbolicity_audit_2d(m16)
        worst_2d = max(worst_2d, rep2.formula_err)
    ok = worst_2d <= 1e-10
    print(f"hyperbolicity-2d: {n2d} samples, max block-eigenvalue formula "
          f"error = {worst_2d:.3e} -> {'ok' if ok else 'FAIL'}")
    if not ok:
        failures.append("hyperbolicity-2d")

    viol, worst_det = realizability_sweep(args.samples, seed=args.seed,
                                          cfl_number=1.0)
    print(f"update-realizability: {args.samples} cell triples at the CFL "
          f"limit, {viol} violations (worst determinant {worst_det:.3e}) -> "
          f"{'ok' if viol == 0 else 'FAIL'}")
    if viol:
        failures.append("realizability")

    rep = verify_conjecture_c()
    print(f"truncated-quadrature bound: max_a u(0,a) = {rep.u0_max:.6f} "
          f"(<= 1.8), {len(rep.violations)} violations over "
          f"{len(rep.lam)} thresholds, min slack {rep.min_slack:.3e} -> "
          f"{'ok' if rep.ok else 'FAIL'}")
    if not rep.ok:
        failures.append("truncated-quadrature-bound")

    if failures:
        print("audit FAILED: " + ", ".join(failures), file=sys.stderr)
        return EXIT_REALIZABILITY if failures == ["realizability"] \
            else EXIT_NUMERICAL
    print("audit ok")
    return EXIT_OK


def cmd_appendix_check(args):
    lam = np.arange(args.lam_min, args.lam_max + 1e-12, args.step)
    rep = verify_conjecture_c(lam)
    print(f"lambda grid: [{args.lam_min}, {args.lam_max}] step {args.step} "
          f"({len(lam)} points)")
    print(f"max_a u(0,a) = {rep.u0_max:.6f} (bound 1.8: "
          f"{'ok' if rep.u0_max <= 1.8 else 'FAIL'})")
    print(f"violations: {len(rep.violations)}; min slack {rep.min_slack:.3e}")
    if not rep.ok:
        return EXIT_NUMERICAL
    print("appendix check ok")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gqmom",
        description="Gaussian moment closures for kinetic equations: "
                    "inversion tools, validation cases and audits.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("invert", help="invert a five-moment vector")
    p.add_argument("moments", nargs="*", help="M0 M1 M2 M3 M4")
    p.add_argument("--file", help="read the moments from a text file")
    p.add_argument("--du-lim", type=float, default=None)
    p.add_argument("--du-max", type=float, default=None)
    p.add_argument("--config", help="JSON config file")
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("riemann", help="run the two-stream Riemann case")
    p.add_argument("--ncells", type=int, default=402)
    p.add_argument("--tend", type=float, default=0.5)
    p.add_argument("--cfl", type=float, default=0.5)
    p.add_argument("--du-lim", type=float, default=8.0)
    p.add_argument("--du-max", type=float, default=10.0)
    p.add_argument("--snapshots", type=float, nargs="*", default=[])
    p.add_argument("--outdir", default="out")
    p.add_argument("--check-realizability", action="store_true")
    p.add_argument("--high-order", action="store_true")
    p.add_argument("--config", help="JSON config file")
    p.set_defaults(func=cmd_riemann)

    p = sub.add_parser("turb2d", help="run the frozen-turbulence comparison")
    p.add_argument("--nx", type=int, default=128)
    p.add_argument("--particles", type=int, default=100_000)
    p.add_argument("--st", type=float, nargs="*", default=[1.0, 5.0, 10.0, 20.0])
    p.add_argument("--tend", type=float, default=4.0)
    p.add_argument("--cfl", type=float, default=0.7)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--particle-seed", type=int, default=7)
    p.add_argument("--first-order", action="store_true",
                   help="disable the quasi-second-order weight reconstruction")
    p.add_argument("--all-moments", action="store_true",
                   help="write all 16 moments instead of M00 only")
    p.add_argument("--vtk", action="store_true",
                   help="also write VTK legacy structured-points files")
    p.add_argument("--outdir", default="out")
    p.add_argument("--config", help="JSON config file")
    p.set_defaults(func=cmd_turb2d)

    p = sub.add_parser("audit", help="hyperbolicity / realizability audits")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", help="JSON config file")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("appendix-check",
                       help="truncated-quadrature abscissa bound sweep")
    p.add_argument("--lam-min", type=float, default=-10.0)
    p.add_argument("--lam-max", type=float, default=10.0)
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--config", help="JSON config file")
    p.set_defaults(func=cmd_appendix_check)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _apply_config_file(args, parser)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RealizabilityError as exc:
        print(f"realizability error: {exc}", file=sys.stderr)
        return EXIT_REALIZABILITY
    except (StepError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
