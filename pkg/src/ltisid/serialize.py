"""Text serialization: trajectory CSV and key=value documents for systems,
Markov parameters and realizations.

All floats are written with 17 significant digits so that round trips are
exact for double precision.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .hankel import RealizationResult
from .markov import MarkovParams
from .systems import StateSpace, Trajectory

__all__ = [
    "save_trajectory_csv",
    "load_trajectory_csv",
    "save_statespace",
    "load_statespace",
    "save_markov",
    "load_markov",
    "save_realization",
    "load_realization",
    "parse_kv",
]


def fmt_float(x) -> str:
    """17-significant-digit decimal representation (exact float64 round trip)."""
    return format(float(x), ".17g")


def _fmt_array(a) -> str:
    return ", ".join(fmt_float(v) for v in np.ravel(a))


def parse_kv(path) -> dict[str, str]:
    """Parse a flat ``key = value`` document; '#' starts a comment line."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def _parse_floats(text: str) -> np.ndarray:
    text = text.strip()
    if not text:
        return np.empty(0)
    return np.array([float(v) for v in text.split(",")], dtype=float)


def save_trajectory_csv(traj: Trajectory, path) -> None:
    """Columnar CSV with header ``t,u_1..u_p,y_1..y_m`` and 1-based time."""
    p = traj.inputs.shape[1]
    m = traj.outputs.shape[1]
    header = ",".join(["t"] + [f"u_{i + 1}" for i in range(p)] + [f"y_{i + 1}" for i in range(m)])
    lines = [header]
    for t in range(len(traj)):
        vals = [str(t + 1)]
        vals += [fmt_float(v) for v in traj.inputs[t]]
        vals += [fmt_float(v) for v in traj.outputs[t]]
        lines.append(",".join(vals))
    Path(path).write_text("\n".join(lines) + "\n")


def load_trajectory_csv(path) -> Trajectory:
    """Read a trajectory CSV written by :func:`save_trajectory_csv`.

    Seed and noise provenance are not stored in the CSV and come back None.
    """
    lines = [l for l in Path(path).read_text().splitlines() if l.strip()]
    header = lines[0].split(",")
    p = sum(1 for h in header if h.startswith("u_"))
    m = sum(1 for h in header if h.startswith("y_"))
    if header[0] != "t" or p < 1 or m < 1 or len(header) != 1 + p + m:
        raise ValueError(f"unrecognized trajectory header: {lines[0]!r}")
    rows = [[float(v) for v in line.split(",")] for line in lines[1:]]
    data = np.array(rows, dtype=float)
    return Trajectory(inputs=data[:, 1:1 + p], outputs=data[:, 1 + p:])


def save_statespace(sys: StateSpace, path) -> None:
    """Key=value document with dims and the four matrices row-major."""
    lines = [
        "# state-space system (row-major matrices)",
        f"n = {sys.n}",
        f"p = {sys.p}",
        f"m = {sys.m}",
        f"A = {_fmt_array(sys.A)}",
        f"B = {_fmt_array(sys.B)}",
        f"C = {_fmt_array(sys.C)}",
        f"D = {_fmt_array(sys.D)}",
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def load_statespace(path) -> StateSpace:
    kv = parse_kv(path)
    n, p, m = int(kv["n"]), int(kv["p"]), int(kv["m"])
    return StateSpace(
        _parse_floats(kv["A"]).reshape(n, n),
        _parse_floats(kv["B"]).reshape(n, p),
        _parse_floats(kv["C"]).reshape(m, n),
        _parse_floats(kv["D"]).reshape(m, p),
    )


def save_markov(params: MarkovParams, path) -> None:
    """Key=value document with dims (m, p, T) and one row-major block per line."""
    lines = [
        "# Markov parameter blocks (row-major)",
        f"m = {params.m}",
        f"p = {params.p}",
        f"T = {params.T}",
    ]
    lines += [f"block_{k + 1} = {_fmt_array(b)}" for k, b in enumerate(params.blocks)]
    Path(path).write_text("\n".join(lines) + "\n")


def load_markov(path) -> MarkovParams:
    kv = parse_kv(path)
    m, p, T = int(kv["m"]), int(kv["p"]), int(kv["T"])
    blocks = tuple(_parse_floats(kv[f"block_{k + 1}"]).reshape(m, p) for k in range(T))
    return MarkovParams(blocks)


def save_realization(result: RealizationResult, path) -> None:
    """Key=value document with the realization matrices, balanced factors,
    singular values and the (T1, T2, n) metadata."""
    T1, T2 = result.shape
    n = result.order
    m = result.C.shape[0]
    p = result.B.shape[1]
    lines = [
        "# balanced state-space realization (row-major matrices)",
        f"n = {n}",
        f"p = {p}",
        f"m = {m}",
        f"T1 = {T1}",
        f"T2 = {T2}",
        f"A = {_fmt_array(result.A)}",
        f"B = {_fmt_array(result.B)}",
        f"C = {_fmt_array(result.C)}",
        f"D = {_fmt_array(result.D)}",
        f"obs_factor = {_fmt_array(result.obs_factor)}",
        f"ctrl_factor = {_fmt_array(result.ctrl_factor)}",
        f"sigma = {_fmt_array(result.sigma)}",
        f"sigma_min = {fmt_float(result.sigma_min)}",
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def load_realization(path) -> RealizationResult:
    kv = parse_kv(path)
    n, p, m = int(kv["n"]), int(kv["p"]), int(kv["m"])
    T1, T2 = int(kv["T1"]), int(kv["T2"])
    return RealizationResult(
        A=_parse_floats(kv["A"]).reshape(n, n),
        B=_parse_floats(kv["B"]).reshape(n, p),
        C=_parse_floats(kv["C"]).reshape(m, n),
        D=_parse_floats(kv["D"]).reshape(m, p),
        obs_factor=_parse_floats(kv["obs_factor"]).reshape(T1 * m, n),
        ctrl_factor=_parse_floats(kv["ctrl_factor"]).reshape(n, T2 * p),
        sigma=_parse_floats(kv["sigma"]),
        sigma_min=float(kv["sigma_min"]),
        order=n,
        shape=(T1, T2),
    )
