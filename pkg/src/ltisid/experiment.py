"""Monte Carlo experiment harness.

Runs seeded sweeps over sample counts, horizons and noise levels on freshly
generated random systems, writes one CSV row per (trial, T, noise, N) cell
plus aggregate (median / mean) rows, and stays byte-identical across reruns
and worker counts.

Seed derivation: every random draw comes from a substream of the master seed
with spawn key

    (0, trial)      per-trial benchmark system
    (1,)            shared benchmark system when fixed_system is set
    (2, trial, T)   trajectory for one (trial, T) pair

so each CSV row (which carries trial, T, noise level, N and the master seed)
can be recomputed in isolation, trials do not perturb each other, and the
trajectories at different noise levels of the same cell share their
underlying Gaussian draws (scaled by the respective standard deviations).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .bounds import BoundConfig, bound_full, bound_simple
from .estimation import build_regression, least_squares_markov
from .exceptions import LtisidError
from .hankel import build_hankel, hankel_shape, ho_kalman
from .markov import MarkovParams
from .metrics import error_report
from .serialize import fmt_float
from .systems import NoiseModel, markov_params, random_system, simulate, system_stats

__all__ = [
    "ExperimentConfig",
    "load_experiment_config",
    "save_experiment_config",
    "run_cell",
    "run_experiment",
    "read_results_csv",
    "RESULT_COLUMNS",
]

_SYSTEM_KEY = 0
_FIXED_SYSTEM_KEY = 1
_TRAJECTORY_KEY = 2

RESULT_COLUMNS = (
    "stat", "trial", "T", "sigma_w", "sigma_z", "N", "seed", "status",
    "spec_err_G", "frob_err_G", "spec_err_H", "err_D", "err_CB",
    "hinf_rel", "h2_rel",
    "err_C_aligned", "err_B_aligned", "err_A_aligned",
    "sigma_min_L", "cond_min_U", "cond_max_U",
    "bound_total", "bound_total_simple",
    "bound_R_z", "bound_R_w", "bound_R_e", "bound_N0", "bound_Nw",
    "bound_applicable",
)

# Columns aggregated over trials in the median / mean rows.
_METRIC_COLUMNS = RESULT_COLUMNS[8:-1]


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative sweep description with benchmark-study defaults:
    2 outputs, 5 states, 3 inputs, horizons 6/12/18, four noise levels with
    matched process/measurement deviations, 20 trials, and a sample grid up
    to 4000."""

    m: int = 2
    n: int = 5
    p: int = 3
    rho_max: float = 0.9
    T_list: tuple[int, ...] = (6, 12, 18)
    sigma_u: float = 1.0
    noise_levels: tuple[tuple[float, float], ...] = (
        (0.0, 0.0), (0.25, 0.25), (0.5, 0.5), (1.0, 1.0))
    N_grid: tuple[int, ...] = (250, 500, 1000, 2000, 4000)
    trials: int = 20
    seed: int = 0
    clip_bound: float = 0.99
    hankel_shape_policy: str = "half"
    c_abs: float = 1.0
    C_abs: float = 1.0
    c0_abs: float = 1.0
    out_dir: str = "results"
    fixed_system: bool = False

    def __post_init__(self):
        object.__setattr__(self, "T_list", tuple(int(t) for t in self.T_list))
        object.__setattr__(self, "N_grid", tuple(int(n) for n in self.N_grid))
        object.__setattr__(self, "noise_levels",
                           tuple((float(w), float(z)) for w, z in self.noise_levels))
        if min(self.m, self.n, self.p) < 1:
            raise ValueError("dimensions m, n, p must all be >= 1")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.sigma_u <= 0:
            raise ValueError("sigma_u must be positive")
        if any(b <= a for a, b in zip(self.N_grid, self.N_grid[1:])) or not self.N_grid:
            raise ValueError("N_grid must be nonempty and strictly increasing")
        if not self.T_list or any(t < 2 for t in self.T_list):
            raise ValueError("every horizon in T_list must be >= 2")
        if not self.noise_levels:
            raise ValueError("at least one noise level is required")

    @property
    def bound_config(self) -> BoundConfig:
        return BoundConfig(c_abs=self.c_abs, C_abs=self.C_abs, c0_abs=self.c0_abs)


_CONFIG_KEYS = ("m", "n", "p", "rho_max", "sigma_u", "trials", "seed", "clip_bound",
                "hankel_shape_policy", "c_abs", "C_abs", "c0_abs", "out_dir",
                "fixed_system")


def load_experiment_config(path) -> ExperimentConfig:
    """Read a flat ``key = value`` config file (arrays as comma lists).

    Noise levels are given as the two parallel lists ``sigma_w_list`` and
    ``sigma_z_list``; absent keys keep their defaults.
    """
    from .serialize import parse_kv

    kv = parse_kv(path)
    kwargs: dict = {}
    for key in ("m", "n", "p", "trials", "seed"):
        if key in kv:
            kwargs[key] = int(kv[key])
    for key in ("rho_max", "sigma_u", "clip_bound", "c_abs", "C_abs", "c0_abs"):
        if key in kv:
            kwargs[key] = float(kv[key])
    for key in ("hankel_shape_policy", "out_dir"):
        if key in kv:
            kwargs[key] = kv[key]
    if "fixed_system" in kv:
        kwargs["fixed_system"] = kv["fixed_system"].lower() in ("1", "true", "yes")
    if "T_list" in kv:
        kwargs["T_list"] = tuple(int(v) for v in kv["T_list"].split(","))
    if "N_grid" in kv:
        kwargs["N_grid"] = tuple(int(v) for v in kv["N_grid"].split(","))
    if ("sigma_w_list" in kv) != ("sigma_z_list" in kv):
        raise ValueError("sigma_w_list and sigma_z_list must be given together")
    if "sigma_w_list" in kv:
        ws = [float(v) for v in kv["sigma_w_list"].split(",")]
        zs = [float(v) for v in kv["sigma_z_list"].split(",")]
        if len(ws) != len(zs):
            raise ValueError("sigma_w_list and sigma_z_list must have equal length")
        kwargs["noise_levels"] = tuple(zip(ws, zs))
    return ExperimentConfig(**kwargs)


def save_experiment_config(cfg: ExperimentConfig, path) -> None:
    lines = ["# experiment configuration"]
    for key in _CONFIG_KEYS:
        lines.append(f"{key} = {getattr(cfg, key)}")
    lines.append("T_list = " + ", ".join(str(t) for t in cfg.T_list))
    lines.append("N_grid = " + ", ".join(str(n) for n in cfg.N_grid))
    lines.append("sigma_w_list = " + ", ".join(fmt_float(w) for w, _ in cfg.noise_levels))
    lines.append("sigma_z_list = " + ", ".join(fmt_float(z) for _, z in cfg.noise_levels))
    Path(path).write_text("\n".join(lines) + "\n")


def _system_seed(cfg: ExperimentConfig, trial: int) -> np.random.SeedSequence:
    if cfg.fixed_system:
        return np.random.SeedSequence(cfg.seed, spawn_key=(_FIXED_SYSTEM_KEY,))
    return np.random.SeedSequence(cfg.seed, spawn_key=(_SYSTEM_KEY, trial))


def _trajectory_seed(cfg: ExperimentConfig, trial: int, T: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(cfg.seed, spawn_key=(_TRAJECTORY_KEY, trial, T))


def run_cell(cfg: ExperimentConfig, trial: int, T: int,
             sigma_w: float, sigma_z: float) -> list[dict]:
    """All rows for one (trial, T, noise level) cell, one row per N.

    Generates the cell's benchmark system and single long trajectory from
    the documented substreams, then estimates from each prefix of the
    regression.  Per-N numerical failures are recorded as error rows and do
    not abort the cell.
    """
    noise = NoiseModel(sigma_u=cfg.sigma_u, sigma_w=sigma_w, sigma_z=sigma_z)
    system = random_system(cfg.m, cfg.n, cfg.p, cfg.rho_max, seed=_system_seed(cfg, trial))
    horizon = max(cfg.N_grid) + T - 1
    traj = simulate(system, noise, horizon, seed=_trajectory_seed(cfg, trial, T))

    base = {"stat": "cell", "trial": trial, "T": T, "sigma_w": sigma_w,
            "sigma_z": sigma_z, "seed": cfg.seed}
    try:
        reg = build_regression(traj, T)
        T1, T2 = hankel_shape(T, cfg.m, cfg.p, cfg.hankel_shape_policy)
        params_true = markov_params(system, T)
        hank_true = build_hankel(params_true, T1, T2 + 1)
        stats = system_stats(system, noise, T)
    except LtisidError as exc:
        return [base | {"N": N, "status": f"error:{type(exc).__name__}"} for N in cfg.N_grid]

    rows = []
    for N in cfg.N_grid:
        row = dict(base, N=N)
        try:
            params_est, cond = least_squares_markov(reg.prefix(N))
            realization = ho_kalman(params_est, cfg.n, T1, T2)
            hank_est = build_hankel(params_est, T1, T2 + 1)
            report = error_report(system, params_true, params_est, hank_true,
                                  hank_est, realization, clip_bound=cfg.clip_bound)
            full = bound_full(stats, noise, (cfg.m, cfg.n, cfg.p), T, N, cfg.bound_config)
            simple = bound_simple(stats, noise, (cfg.m, cfg.n, cfg.p), T, N, cfg.bound_config)
            align = report.alignment
            row.update(
                status="ok",
                spec_err_G=report.spec_err_G, frob_err_G=report.frob_err_G,
                spec_err_H=report.spec_err_H, err_D=report.err_D, err_CB=report.err_CB,
                hinf_rel=report.hinf_rel, h2_rel=report.h2_rel,
                err_C_aligned=None if align is None else align.err_C,
                err_B_aligned=None if align is None else align.err_B,
                err_A_aligned=None if align is None else align.err_A,
                sigma_min_L=realization.sigma_min,
                cond_min_U=cond.sigma_min, cond_max_U=cond.sigma_max,
                bound_total=full.total, bound_total_simple=simple.total,
                bound_R_z=full.R_z, bound_R_w=full.R_w, bound_R_e=full.R_e,
                bound_N0=full.N0, bound_Nw=full.Nw,
                bound_applicable=full.applicable,
            )
        except LtisidError as exc:
            row["status"] = f"error:{type(exc).__name__}"
        rows.append(row)
    return rows


def _format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return fmt_float(value)


def _format_row(row: dict) -> str:
    return ",".join(_format_value(row.get(col)) for col in RESULT_COLUMNS)


def _aggregate_rows(cfg: ExperimentConfig, rows: list[dict]) -> list[dict]:
    """Median and mean rows over trials for every (T, noise, N) group."""
    grouped: dict[tuple, list[dict]] = {}
    for row in rows:
        if row.get("status") != "ok":
            continue
        key = (row["T"], row["sigma_w"], row["sigma_z"], row["N"])
        grouped.setdefault(key, []).append(row)
    out = []
    for T in cfg.T_list:
        for sigma_w, sigma_z in cfg.noise_levels:
            for N in cfg.N_grid:
                members = grouped.get((T, sigma_w, sigma_z, N))
                if not members:
                    continue
                for stat, fn in (("median", np.median), ("mean", np.mean)):
                    agg = {"stat": stat, "trial": None, "T": T, "sigma_w": sigma_w,
                           "sigma_z": sigma_z, "N": N, "seed": cfg.seed, "status": ""}
                    for col in _METRIC_COLUMNS:
                        vals = [r[col] for r in members if r.get(col) is not None]
                        agg[col] = float(fn(vals)) if vals else None
                    out.append(agg)
    return out


def run_experiment(cfg: ExperimentConfig, threads: int | None = None,
                   progress=None) -> list[dict]:
    """Run the full sweep, write ``<out_dir>/results.csv`` and return all rows.

    ``threads`` falls back to the SYSID_THREADS environment variable and then
    to 1.  Cells are independent pure functions of the master seed, results
    are written in sweep order, and aggregate rows are appended at the end,
    so the CSV is byte-identical for any worker count.  ``progress`` is an
    optional callable receiving one line per finished cell.
    """
    if threads is None:
        threads = int(os.environ.get("SYSID_THREADS", "1"))
    if threads < 1:
        raise ValueError("threads must be >= 1")
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / "results.csv"

    cells = [(trial, T, sigma_w, sigma_z)
             for trial in range(cfg.trials)
             for T in cfg.T_list
             for sigma_w, sigma_z in cfg.noise_levels]

    all_rows: list[dict] = []
    with open(out_path, "w", newline="\n") as fh:
        fh.write("#schema=1 " + ",".join(RESULT_COLUMNS) + "\n")
        fh.write(",".join(RESULT_COLUMNS) + "\n")

        def consume(cell, rows):
            all_rows.extend(rows)
            for row in rows:
                fh.write(_format_row(row) + "\n")
            if progress is not None:
                trial, T, sigma_w, sigma_z = cell
                progress(f"trial={trial} T={T} sigma_w={sigma_w} sigma_z={sigma_z} done")

        if threads == 1:
            for cell in cells:
                consume(cell, run_cell(cfg, *cell))
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                for cell, rows in zip(cells, pool.map(lambda c: run_cell(cfg, *c), cells)):
                    consume(cell, rows)

        aggregates = _aggregate_rows(cfg, all_rows)
        for row in aggregates:
            fh.write(_format_row(row) + "\n")
    return all_rows + aggregates


def read_results_csv(path) -> list[dict]:
    """Read a results CSV back into row dictionaries (floats parsed, empty
    fields as None)."""
    lines = Path(path).read_text().splitlines()
    lines = [l for l in lines if l and not l.startswith("#")]
    header = lines[0].split(",")
    rows = []
    for line in lines[1:]:
        row: dict = {}
        for col, val in zip(header, line.split(",")):
            if val == "":
                row[col] = None
            elif col in ("stat", "status"):
                row[col] = val
            elif col in ("trial", "T", "N", "seed"):
                row[col] = int(val)
            else:
                row[col] = float(val)
        rows.append(row)
    return rows
