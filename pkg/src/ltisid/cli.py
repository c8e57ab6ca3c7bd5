"""Command-line harness: simulate, estimate, realize, bounds, experiment, plot.

Exit codes: 0 success, 1 usage error, 2 numerical or runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import serialize
from .bounds import (BoundConfig, bound_full, bound_simple, horizon_condition,
                     infinite_operator_bounds, tail_spectral_bound)
from .estimation import build_regression, least_squares_markov
from .exceptions import LtisidError
from .experiment import (ExperimentConfig, load_experiment_config, read_results_csv,
                         run_experiment)
from .hankel import hankel_shape, ho_kalman
from .plots import plot_results
from .systems import NoiseModel, random_system, simulate, system_stats

__all__ = ["cli_dispatch", "main"]


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on usage errors; remap to 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="experiment config file (key = value)")
    common.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    common.add_argument("--out-dir", type=Path, default=None,
                        help="output directory (default current directory)")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: SYSID_THREADS or 1)")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")
    return common


def _resolve_common(args) -> None:
    # Defaults live here so the experiment subcommand can tell an explicit
    # flag apart from the fallback (explicit flags override the config file).
    args.seed_given = args.seed is not None
    args.out_dir_given = args.out_dir is not None
    if args.seed is None:
        args.seed = 0
    if args.out_dir is None:
        args.out_dir = Path(".")


def _load_system(args):
    if args.system is not None:
        return serialize.load_statespace(args.system)
    m, n, p = args.dims
    return random_system(m, n, p, args.rho_max, seed=args.seed)


def _add_system_source(sub):
    sub.add_argument("--system", type=Path, help="state-space file (omit to generate randomly)")
    sub.add_argument("--dims", type=int, nargs=3, default=(2, 5, 3), metavar=("M", "N", "P"),
                     help="random system dimensions (default 2 5 3)")
    sub.add_argument("--rho-max", type=float, default=0.9,
                     help="random system spectral radius cap (default 0.9)")


def _cmd_simulate(args) -> int:
    system = _load_system(args)
    noise = NoiseModel(sigma_u=args.sigma_u, sigma_w=args.sigma_w, sigma_z=args.sigma_z)
    traj = simulate(system, noise, args.horizon, seed=args.seed)
    out = args.out or (args.out_dir / "trajectory.csv")
    serialize.save_trajectory_csv(traj, out)
    if not args.quiet:
        print(f"wrote {len(traj)} samples to {out}")
    return 0


def _cmd_estimate(args) -> int:
    traj = serialize.load_trajectory_csv(args.traj)
    params, cond = least_squares_markov(build_regression(traj, args.horizon))
    out = args.out or (args.out_dir / "markov.txt")
    serialize.save_markov(params, out)
    if not args.quiet:
        print(f"wrote {params.T} blocks to {out} "
              f"(sigma_min(U)={cond.sigma_min:.6g}, sigma_max(U)={cond.sigma_max:.6g})")
    return 0


def _cmd_realize(args) -> int:
    params = serialize.load_markov(args.markov)
    if args.shape is not None:
        T1, T2 = args.shape
    else:
        T1, T2 = hankel_shape(params.T, params.m, params.p, args.shape_policy)
    result = ho_kalman(params, args.order, T1, T2)
    out = args.out or (args.out_dir / "realization.txt")
    serialize.save_realization(result, out)
    if not args.quiet:
        print(f"wrote order-{result.order} realization to {out} "
              f"(sigma_min(L)={result.sigma_min:.6g})")
    return 0


def _cmd_bounds(args) -> int:
    system = _load_system(args)
    noise = NoiseModel(sigma_u=args.sigma_u, sigma_w=args.sigma_w, sigma_z=args.sigma_z)
    dims = (system.m, system.n, system.p)
    cfg = BoundConfig(c_abs=args.c_abs, C_abs=args.C_abs, c0_abs=args.c0_abs)
    stats = system_stats(system, noise, args.horizon)
    simple = bound_simple(stats, noise, dims, args.horizon, args.samples, cfg)
    full = bound_full(stats, noise, dims, args.horizon, args.samples, cfg)
    lines = [
        f"rho = {stats.rho:.6g}",
        f"phi = {stats.phi:.6g}",
        f"sigma_e = {stats.sigma_e:.6g}",
        f"simple_total = {simple.total:.6g}",
        f"simple_N0 = {simple.N0:.6g}",
        f"simple_applicable = {simple.applicable}",
        f"R_z = {full.R_z:.6g}",
        f"R_w = {full.R_w:.6g}",
        f"R_e = {full.R_e:.6g}",
        f"full_total = {full.total:.6g}",
        f"full_Nw = {full.Nw:.6g}",
        f"full_applicable = {full.applicable}",
        f"tail_bound = {tail_spectral_bound(stats, system, args.horizon):.6g}",
    ]
    try:
        lines.append(
            f"horizon_min = {horizon_condition(stats, dims, args.samples, args.eps0, cfg)}")
    except LtisidError as exc:
        lines.append(f"horizon_min = unavailable ({exc})")
    inf_ops = infinite_operator_bounds(noise, dims, args.horizon, args.samples, args.eps0)
    lines.append(f"infinite_G = {inf_ops.bound_G:.6g}")
    lines.append(f"infinite_H = {inf_ops.bound_H:.6g}")
    lines.append(f"infinite_applicable = {inf_ops.applicable}")
    print("\n".join(lines))
    return 0


def _cmd_experiment(args) -> int:
    if args.config is not None:
        cfg = load_experiment_config(args.config)
    else:
        cfg = ExperimentConfig()
    overrides = {}
    if args.seed_given:
        overrides["seed"] = args.seed
    if args.out_dir_given:
        overrides["out_dir"] = str(args.out_dir)
    if overrides:
        from dataclasses import replace
        cfg = replace(cfg, **overrides)
    progress = None if args.quiet else lambda line: print(line, file=sys.stderr)
    rows = run_experiment(cfg, threads=args.threads, progress=progress)
    plot_results(rows, "markov", cfg.out_dir, bound_overlay=args.bound_overlay)
    plot_results(rows, "hinf", cfg.out_dir)
    if not args.quiet:
        print(f"wrote {Path(cfg.out_dir) / 'results.csv'} and SVG panels")
    return 0


def _cmd_plot(args) -> int:
    rows = read_results_csv(args.results)
    written = plot_results(rows, args.kind, args.out_dir, bound_overlay=args.bound_overlay)
    if not args.quiet:
        for path in written:
            print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = _Parser(prog="ltisid",
                     description="LTI system identification from a single trajectory")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", parents=[common], help="emit a trajectory CSV")
    _add_system_source(p_sim)
    p_sim.add_argument("--sigma-u", type=float, default=1.0)
    p_sim.add_argument("--sigma-w", type=float, default=0.0)
    p_sim.add_argument("--sigma-z", type=float, default=0.0)
    p_sim.add_argument("--horizon", type=int, required=True, help="trajectory length")
    p_sim.add_argument("--out", type=Path, help="output CSV (default <out-dir>/trajectory.csv)")
    p_sim.set_defaults(func=_cmd_simulate)

    p_est = sub.add_parser("estimate", parents=[common],
                           help="trajectory CSV -> Markov parameter file")
    p_est.add_argument("--traj", type=Path, required=True)
    p_est.add_argument("--horizon", type=int, required=True, help="number of blocks T")
    p_est.add_argument("--out", type=Path, help="output file (default <out-dir>/markov.txt)")
    p_est.set_defaults(func=_cmd_estimate)

    p_real = sub.add_parser("realize", parents=[common],
                            help="Markov parameter file -> balanced realization")
    p_real.add_argument("--markov", type=Path, required=True)
    p_real.add_argument("--order", type=int, required=True)
    p_real.add_argument("--shape", type=int, nargs=2, metavar=("T1", "T2"),
                        help="Hankel split (default from --shape-policy)")
    p_real.add_argument("--shape-policy", choices=("half", "balanced"), default="half")
    p_real.add_argument("--out", type=Path, help="output file (default <out-dir>/realization.txt)")
    p_real.set_defaults(func=_cmd_realize)

    p_bnd = sub.add_parser("bounds", parents=[common],
                           help="evaluate the finite-sample bounds for given parameters")
    _add_system_source(p_bnd)
    p_bnd.add_argument("--sigma-u", type=float, default=1.0)
    p_bnd.add_argument("--sigma-w", type=float, default=0.0)
    p_bnd.add_argument("--sigma-z", type=float, default=0.0)
    p_bnd.add_argument("--horizon", "-T", type=int, required=True)
    p_bnd.add_argument("--samples", "-N", type=int, required=True)
    p_bnd.add_argument("--eps0", type=float, default=0.5)
    p_bnd.add_argument("--c-abs", type=float, default=1.0)
    p_bnd.add_argument("--C-abs", type=float, default=1.0)
    p_bnd.add_argument("--c0-abs", type=float, default=1.0)
    p_bnd.set_defaults(func=_cmd_bounds)

    p_exp = sub.add_parser("experiment", parents=[common],
                           help="full Monte Carlo sweep: results.csv + SVG panels")
    p_exp.add_argument("--bound-overlay", action="store_true",
                       help="overlay dashed theory-bound curves")
    p_exp.set_defaults(func=_cmd_experiment)

    p_plot = sub.add_parser("plot", parents=[common], help="results CSV -> SVG panels")
    p_plot.add_argument("--results", type=Path, required=True)
    p_plot.add_argument("--kind", choices=("markov", "hinf"), default="markov")
    p_plot.add_argument("--bound-overlay", action="store_true")
    p_plot.set_defaults(func=_cmd_plot)
    return parser


def cli_dispatch(argv=None) -> int:
    """Parse arguments and run the selected subcommand; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (LtisidError, ValueError, OSError, np.linalg.LinAlgError) as exc:
        print(f"ltisid: error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_dispatch(sys.argv[1:]))
