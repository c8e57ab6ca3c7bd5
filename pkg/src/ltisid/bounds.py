"""Closed-form finite-sample bounds as computable reference quantities.

Every calculator evaluates the right-hand side of one of the guarantees:
spectral estimation error of the Markov parameter matrix (simple and full
versions), tail of the impulse response, the horizon condition for
approximating the infinite operators, Hankel perturbation bounds, and the
robustness bounds for the realization step.

The underlying statements contain unnamed absolute constants; they default
to 1 here and are configurable, so the simple/full estimation bounds are
shape-only references (correct scaling in N, unverified constants), while
the perturbation and robustness bounds are constant-free and hold exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .exceptions import FixedPointError, UnstableSystemError
from .systems import NoiseModel, StateSpace, SystemStats

__all__ = [
    "BoundConfig",
    "BoundReport",
    "RobustnessBounds",
    "InfiniteOperatorBounds",
    "bound_simple",
    "bound_full",
    "tail_spectral_bound",
    "horizon_condition",
    "hankel_perturbation_bounds",
    "hokalman_robustness_bounds",
    "corollary_robustness_bounds",
    "infinite_operator_bounds",
]


@dataclass(frozen=True)
class BoundConfig:
    """Stand-ins for the absolute constants of the estimation bounds.

    The true values are unspecified, so defaults of 1 make the reported
    totals shape-only; reports carry the configuration used.
    """

    c_abs: float = 1.0
    C_abs: float = 1.0
    c0_abs: float = 1.0

    def __post_init__(self):
        for name in ("c_abs", "C_abs", "c0_abs"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


DEFAULT_BOUND_CONFIG = BoundConfig()


@dataclass(frozen=True)
class BoundReport:
    """Evaluated estimation bound: sample thresholds, components and total.

    ``total`` always equals (R_z + R_w + R_e) / (sigma_u sqrt(N));
    ``applicable`` records whether the statement's hypotheses held for the
    given system, horizon and sample count.  ``total_frob`` is the Frobenius
    variant of the simple bound when available.
    """

    N0: float
    Nw: float
    R_z: float
    R_w: float
    R_e: float
    total: float
    applicable: bool
    config: BoundConfig = DEFAULT_BOUND_CONFIG
    total_frob: Optional[float] = None


def _log_sq(x: float) -> float:
    return math.log(x) ** 2


def _sample_threshold(c: float, T: int, q: int, N: int) -> float:
    """Polylog sample threshold c * T q * log^2(2 T q) * log^2(2 N q)."""
    return c * T * q * _log_sq(2.0 * T * q) * _log_sq(2.0 * N * q)


def bound_simple(stats: SystemStats, noise: NoiseModel, dims: tuple[int, int, int],
                 T: int, N: int, cfg: BoundConfig = DEFAULT_BOUND_CONFIG) -> BoundReport:
    """Simple spectral error bound for the least-squares Markov estimate.

    total = ((sigma_z + sigma_e + sigma_w ||F||) / sigma_u) * sqrt(N0 / N)
    with N0 the polylog threshold at total dimension q = p + n + m.  The
    Frobenius variant replaces ||F|| by ||F||_F and multiplies the scalar
    noise terms by sqrt(m).
    """
    m, n, p = dims
    q = p + n + m
    N0 = _sample_threshold(cfg.c_abs, T, q, N)
    root = math.sqrt(N0)
    R_z = noise.sigma_z * root
    R_e = stats.sigma_e * root
    R_w = noise.sigma_w * stats.noise_map_norm * root
    total = (R_z + R_e + R_w) / (noise.sigma_u * math.sqrt(N))
    total_frob = ((noise.sigma_z + stats.sigma_e) * math.sqrt(m)
                  + noise.sigma_w * stats.noise_map_fro) / noise.sigma_u * math.sqrt(N0 / N)
    applicable = (stats.rho ** T <= 0.99) and (N >= N0)
    Nw = _sample_threshold(cfg.c_abs, T, p + n, N)
    return BoundReport(N0=N0, Nw=Nw, R_z=R_z, R_w=R_w, R_e=R_e, total=total,
                       applicable=applicable, config=cfg, total_frob=total_frob)


def bound_full(stats: SystemStats, noise: NoiseModel, dims: tuple[int, int, int],
               T: int, N: int, cfg: BoundConfig = DEFAULT_BOUND_CONFIG) -> BoundReport:
    """Full spectral error bound with separate measurement / process /
    truncation components.

        R_z = 8 sigma_z sqrt(Tp + m)
        R_w = sigma_w ||F|| max(sqrt(Nw), Nw / sqrt(N))
        R_e = C sigma_e sqrt((1 + mT / (N (1 - rho^T))) (Tp + m))

    with Nw the polylog threshold at q = p + n, and
    total = (R_z + R_w + R_e) / (sigma_u sqrt(N)).  Applicability requires
    N to reach the threshold at q = p alone.
    """
    m, n, p = dims
    if stats.rho >= 1:
        raise UnstableSystemError(
            f"estimation bound undefined for rho(A)={stats.rho:.4g} >= 1")
    Nw = _sample_threshold(cfg.c_abs, T, p + n, N)
    N0 = cfg.c_abs * T * p * _log_sq(2.0 * T * p) * _log_sq(2.0 * N * p)
    R_z = 8.0 * noise.sigma_z * math.sqrt(T * p + m)
    R_w = noise.sigma_w * stats.noise_map_norm * max(math.sqrt(Nw), Nw / math.sqrt(N))
    R_e = cfg.C_abs * stats.sigma_e * math.sqrt(
        (1.0 + m * T / (N * (1.0 - stats.rho ** T))) * (T * p + m))
    total = (R_z + R_w + R_e) / (noise.sigma_u * math.sqrt(N))
    return BoundReport(N0=N0, Nw=Nw, R_z=R_z, R_w=R_w, R_e=R_e, total=total,
                       applicable=N >= N0, config=cfg)


def tail_spectral_bound(stats: SystemStats, sys: StateSpace, T: int) -> float:
    """Bound on the summed spectral norms of impulse-response blocks at lag
    T-1 and beyond: phi ||C|| ||B|| rho^(T-1) / (1 - rho)."""
    if stats.rho >= 1:
        raise UnstableSystemError("tail bound diverges for rho(A) >= 1")
    normC = np.linalg.norm(sys.C, 2)
    normB = np.linalg.norm(sys.B, 2)
    return float(stats.phi * normC * normB * stats.rho ** (T - 1) / (1.0 - stats.rho))


def horizon_condition(stats: SystemStats, dims: tuple[int, int, int], N: int,
                      eps0: float, cfg: BoundConfig = DEFAULT_BOUND_CONFIG,
                      max_iter: int = 100) -> int:
    """Smallest horizon T making the truncated estimate eps0-accurate.

    Finds the least integer T with

        T >= (c0 + log(N/T + T (1 + m/p)) - log eps0) / (-log rho).

    T appears on both sides, so the condition is resolved by the fixed-point
    iteration T <- ceil(RHS(T)) from T = 2; the right side varies only
    logarithmically in T, so the iteration settles quickly.  A final local
    scan guarantees minimality even if the iteration alternates between two
    neighbours.
    """
    m, n, p = dims
    if not 0 < eps0 < 1:
        raise ValueError(f"eps0 must lie in (0, 1), got {eps0}")
    if not 0 < stats.rho < 1:
        raise UnstableSystemError(
            f"horizon condition needs 0 < rho(A) < 1, got {stats.rho:.4g}")
    decay = -math.log(stats.rho)

    def rhs(T: float) -> float:
        return (cfg.c0_abs + math.log(N / T + T * (1.0 + m / p)) - math.log(eps0)) / decay

    T = 2
    prev = None
    for _ in range(max_iter):
        T_next = max(1, math.ceil(rhs(T)))
        if T_next == T:
            break
        if prev is not None and T_next == prev:
            T = max(T, T_next)  # period-2 cycle: keep the feasible neighbour
            break
        prev, T = T, T_next
    else:
        raise FixedPointError("horizon condition iteration did not settle")
    while T < 10 ** 9 and T < rhs(T):
        T += 1
    while T > 1 and (T - 1) >= rhs(T - 1):
        T -= 1
    return T


def hankel_perturbation_bounds(T1: int, T2: int, markov_err_spec: float) -> tuple[float, float]:
    """Perturbation bounds for the Hankel stage, in terms of the spectral
    error of the Markov parameter matrix.

    Returns (bound on ||H - H_hat||, bound on ||L - L_hat||) for the full
    (T1, T2+1) Hankel matrix and the rank-n approximation of its first T2
    block columns:

        ||H - H_hat|| <= sqrt(min(T1, T2+1)) * err
        ||L - L_hat|| <= 2 sqrt(min(T1, T2)) * err

    These are constant-free and hold without exception.
    """
    err = float(markov_err_spec)
    return (math.sqrt(min(T1, T2 + 1)) * err, 2.0 * math.sqrt(min(T1, T2)) * err)


class RobustnessBounds(NamedTuple):
    """Realization robustness bounds and whether their hypothesis held."""

    bound_CB: float
    bound_A: float
    applicable: bool


def hokalman_robustness_bounds(sigma_min_L: float, n: int, norm_Hplus: float,
                               err_Hplus: float, err_L: float) -> RobustnessBounds:
    """Robustness of the realization step to Hankel perturbations.

    Requires err_L <= sigma_min(L) / 2 (flagged, not raised).  Up to a
    unitary change of basis,

        ||C - C_hat T||_F and ||B - T* B_hat||_F <= sqrt(5 n err_L)
        ||A - T* A_hat T||_F <= (14 sqrt(n) / s) *
            (sqrt(err_L / s) (||H_plus|| + err_Hplus) + err_Hplus)

    with s = sigma_min(L).
    """
    applicable = err_L <= sigma_min_L / 2.0
    bound_CB = math.sqrt(5.0 * n * err_L)
    if sigma_min_L > 0:
        bound_A = (14.0 * math.sqrt(n) / sigma_min_L) * (
            math.sqrt(err_L / sigma_min_L) * (norm_Hplus + err_Hplus) + err_Hplus)
    else:
        bound_A = math.inf
    return RobustnessBounds(bound_CB=bound_CB, bound_A=bound_A, applicable=applicable)


def corollary_robustness_bounds(sigma_min_L: float, n: int, norm_H: float,
                                err_H: float) -> RobustnessBounds:
    """Variant of the realization robustness bound driven by ||H - H_hat||.

    Requires err_H <= sigma_min(L) / 4 (flagged).  Then the aligned factor
    errors are at most 5 sqrt(n err_H) and

        ||A - T* A_hat T||_F <= 50 sqrt(n err_H) ||H|| / sigma_min(L)^(3/2).
    """
    applicable = err_H <= sigma_min_L / 4.0
    bound_CB = 5.0 * math.sqrt(n * err_H)
    if sigma_min_L > 0:
        bound_A = 50.0 * math.sqrt(n * err_H) * norm_H / sigma_min_L ** 1.5
    else:
        bound_A = math.inf
    return RobustnessBounds(bound_CB=bound_CB, bound_A=bound_A, applicable=applicable)


class InfiniteOperatorBounds(NamedTuple):
    """Bounds on the infinite impulse-response and Hankel operators."""

    bound_G: float
    bound_H: float
    applicable: bool


def infinite_operator_bounds(noise: NoiseModel, dims: tuple[int, int, int],
                             T: int, N: int, eps0: float) -> InfiniteOperatorBounds:
    """Error bounds for the zero-padded estimates of the infinite operators.

        bound_G = (8 sigma_z / sigma_u + eps0) sqrt((Tp + m) / N)
        bound_H = T * bound_G

    The statement assumes no process noise and a horizon satisfying
    :func:`horizon_condition`; ``applicable`` records the former (the caller
    is responsible for checking the horizon).
    """
    m, n, p = dims
    if noise.sigma_u <= 0:
        raise ValueError("infinite-operator bounds require sigma_u > 0")
    bound_G = (8.0 * noise.sigma_z / noise.sigma_u + eps0) * math.sqrt((T * p + m) / N)
    return InfiniteOperatorBounds(bound_G=bound_G, bound_H=T * bound_G,
                                  applicable=noise.sigma_w == 0.0)
