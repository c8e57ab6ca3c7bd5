"""Discrete-time LTI state-space systems.

Simulation of single input/output trajectories under Gaussian input, process
and measurement noise, random benchmark generation, and the system constants
(spectral radius, transient norm ratio, steady-state covariance, effective
truncation deviation) that enter every finite-sample bound.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
import scipy.linalg

from .exceptions import SimulationOverflowError, UnstableSystemError
from .markov import MarkovParams, _freeze

__all__ = [
    "StateSpace",
    "NoiseModel",
    "Trajectory",
    "SystemStats",
    "make_rng",
    "simulate",
    "forced_response",
    "markov_params",
    "random_system",
    "spectral_radius",
    "phi_ratio",
    "dlyap",
    "steady_state_cov",
    "noise_response_map",
    "system_stats",
]

# Seed-derivation tags, see make_rng docstring.
_SYSTEM_STREAM = 0


def make_rng(seed, *key) -> np.random.Generator:
    """Random generator on an independent, reproducible substream.

    Substream rule: ``SeedSequence(seed, spawn_key=key)`` feeding PCG64.  The
    same (seed, key) pair always produces the same stream, and distinct keys
    produce independent streams regardless of how many other streams exist or
    in which order they are created, which keeps parallel trials reproducible.
    ``seed`` may also be a prepared ``SeedSequence`` (used as is; ``key`` must
    then be empty).
    """
    if isinstance(seed, np.random.SeedSequence):
        if key:
            raise ValueError("cannot combine an explicit SeedSequence with extra key parts")
        ss = seed
    else:
        ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def _as_matrix(x, name: str) -> np.ndarray:
    arr = np.atleast_2d(np.asarray(x, dtype=float))
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"{name} must be a nonempty 2-D matrix, got shape {np.shape(x)}")
    return arr


@dataclass(frozen=True, eq=False)
class StateSpace:
    """Discrete-time system x' = A x + B u + w, y = C x + D u + z.

    A is n x n, B is n x p, C is m x n, D is m x p.  Scalars are accepted and
    promoted to 1 x 1 matrices.  Instances are immutable; the arrays are
    marked read-only so they can be shared across threads.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        A = _as_matrix(self.A, "A")
        B = _as_matrix(self.B, "B")
        C = _as_matrix(self.C, "C")
        D = _as_matrix(self.D, "D")
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError(f"A must be square, got {A.shape}")
        if B.shape[0] != n:
            raise ValueError(f"B must have {n} rows, got {B.shape}")
        if C.shape[1] != n:
            raise ValueError(f"C must have {n} columns, got {C.shape}")
        if D.shape != (C.shape[0], B.shape[1]):
            raise ValueError(f"D must be {(C.shape[0], B.shape[1])}, got {D.shape}")
        for name, arr in (("A", A), ("B", B), ("C", C), ("D", D)):
            object.__setattr__(self, name, _freeze(arr))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def p(self) -> int:
        return self.B.shape[1]

    @property
    def m(self) -> int:
        return self.C.shape[0]


@dataclass(frozen=True)
class NoiseModel:
    """Standard deviations of the i.i.d. Gaussian input, process and
    measurement noise streams.

    ``sigma_u`` may be zero for deterministic-input tests, but every
    estimation-side quantity that divides by it requires ``sigma_u > 0``.
    """

    sigma_u: float = 1.0
    sigma_w: float = 0.0
    sigma_z: float = 0.0

    def __post_init__(self):
        for name in ("sigma_u", "sigma_w", "sigma_z"):
            v = float(getattr(self, name))
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
            object.__setattr__(self, name, v)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Single input/output rollout; states are not retained unless asked for.

    ``inputs`` has shape (N, p), ``outputs`` shape (N, m); row t-1 holds the
    sample at time t (1-based, zero initial state).  ``seed`` and ``noise``
    are provenance metadata and may be None for deserialized trajectories.
    """

    inputs: np.ndarray
    outputs: np.ndarray
    seed: object = None
    noise: Optional[NoiseModel] = None
    states: Optional[np.ndarray] = None

    def __post_init__(self):
        u = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        y = np.atleast_2d(np.asarray(self.outputs, dtype=float))
        if u.shape[0] != y.shape[0]:
            raise ValueError(f"inputs ({u.shape[0]}) and outputs ({y.shape[0]}) differ in length")
        if u.shape[0] < 1:
            raise ValueError("trajectory must contain at least one sample")
        object.__setattr__(self, "inputs", _freeze(u))
        object.__setattr__(self, "outputs", _freeze(y))
        if self.states is not None:
            object.__setattr__(self, "states", _freeze(np.atleast_2d(self.states)))

    def __len__(self) -> int:
        return self.inputs.shape[0]


def forced_response(sys: StateSpace, inputs, process_noise=None, output_noise=None,
                    keep_states: bool = False) -> Trajectory:
    """Deterministic rollout of the state recursion for given input samples.

    Starts from a zero state.  ``process_noise`` and ``output_noise`` default
    to zero sequences of matching length.  Raises
    :class:`SimulationOverflowError` naming the offending time step if the
    state becomes non-finite.
    """
    u = np.asarray(inputs, dtype=float)
    if u.ndim == 1:
        u = u[:, None]
    horizon = u.shape[0]
    if u.shape != (horizon, sys.p):
        raise ValueError(f"inputs must have shape (N, {sys.p}), got {u.shape}")
    w = np.zeros((horizon, sys.n)) if process_noise is None else np.asarray(process_noise, dtype=float)
    z = np.zeros((horizon, sys.m)) if output_noise is None else np.asarray(output_noise, dtype=float)
    if w.shape != (horizon, sys.n) or z.shape != (horizon, sys.m):
        raise ValueError("noise sequences must match the input length and system dimensions")

    A, B, C, D = sys.A, sys.B, sys.C, sys.D
    x = np.zeros(sys.n)
    ys = np.empty((horizon, sys.m))
    xs = np.empty((horizon, sys.n)) if keep_states else None
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(horizon):
            if keep_states:
                xs[t] = x
            ys[t] = C @ x + D @ u[t] + z[t]
            x = A @ x + B @ u[t] + w[t]
            if not np.all(np.isfinite(x)):
                raise SimulationOverflowError(t + 1)
    return Trajectory(inputs=u, outputs=ys, states=xs)


def simulate(sys: StateSpace, noise: NoiseModel, horizon: int, seed,
             keep_states: bool = False) -> Trajectory:
    """Roll out one trajectory of length ``horizon`` under Gaussian noise.

    All three noise streams are drawn as standard-normal blocks (inputs,
    then process noise, then measurement noise) and scaled by their standard
    deviations, so the same seed yields a bit-identical trajectory, and
    trajectories at different noise levels share the same underlying draws.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    rng = make_rng(seed)
    u = noise.sigma_u * rng.standard_normal((horizon, sys.p))
    w = noise.sigma_w * rng.standard_normal((horizon, sys.n))
    z = noise.sigma_z * rng.standard_normal((horizon, sys.m))
    traj = forced_response(sys, u, w, z, keep_states=keep_states)
    return replace(traj, seed=seed, noise=noise)


def markov_params(sys: StateSpace, T: int) -> MarkovParams:
    """First ``T`` impulse-response blocks [D, CB, CAB, ...]."""
    if T < 1:
        raise ValueError(f"horizon T must be >= 1, got {T}")
    blocks = [sys.D]
    P = sys.B
    for _ in range(T - 1):
        blocks.append(sys.C @ P)
        P = sys.A @ P
    return MarkovParams(tuple(blocks))


def random_system(m: int, n: int, p: int, rho_max: float, seed) -> StateSpace:
    """Random stable benchmark system.

    A is diagonal with i.i.d. Uniform[0, rho_max] entries, so the spectral
    radius never exceeds ``rho_max``.  B has N(0, 1/n) entries and C, D have
    N(0, 1/m) entries, which makes each of them an isometry in expectation so
    the noise standard deviations act on a normalized scale.
    """
    if min(m, n, p) < 1:
        raise ValueError("dimensions m, n, p must all be >= 1")
    if not 0 <= rho_max < 1:
        raise ValueError(f"rho_max must lie in [0, 1) for a stable benchmark, got {rho_max}")
    rng = make_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    A = np.diag(rng.uniform(0.0, rho_max, size=n))
    B = rng.normal(0.0, np.sqrt(1.0 / n), size=(n, p))
    C = rng.normal(0.0, np.sqrt(1.0 / m), size=(m, n))
    D = rng.normal(0.0, np.sqrt(1.0 / m), size=(m, p))
    return StateSpace(A, B, C, D)


def spectral_radius(A) -> float:
    """Largest absolute value of the eigenvalues of a square matrix."""
    A = _as_matrix(A, "A")
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"spectral radius needs a square matrix, got {A.shape}")
    return float(np.max(np.abs(np.linalg.eigvals(A))))


def phi_ratio(A, tau_max: int = 200, full_output: bool = False):
    """Largest ratio of the spectral norm of A^tau to rho(A)^tau, tau <= tau_max.

    This is a lower approximation of the supremum over all tau >= 0; for a
    stable diagonalizable A the ratio is eventually decreasing, so a finite
    scan suffices in practice.  With ``full_output=True`` also returns the
    tau achieving the maximum so callers can detect saturation at ``tau_max``.

    The ratio is 1.0 for any normal matrix.  When rho(A) = 0 (nilpotent A)
    the quantity is undefined; a warning flags the degenerate case and the
    convention "ratio = 0 whenever A^tau = 0" is applied, which yields 1.0
    for A = 0 and infinity for nonzero nilpotent A.
    """
    A = _as_matrix(A, "A")
    if tau_max < 1:
        raise ValueError(f"tau_max must be >= 1, got {tau_max}")
    rho = spectral_radius(A)
    if rho == 0.0:
        warnings.warn("phi_ratio is degenerate for nilpotent A (rho = 0)", RuntimeWarning,
                      stacklevel=2)
        best, best_tau = 1.0, 0
        P = A.copy()
        for tau in range(1, tau_max + 1):
            if np.linalg.norm(P, 2) > 0.0:
                best, best_tau = np.inf, tau
                break
            P = P @ A
        result = (best, best_tau)
    else:
        # Scan norms of (A / rho)^tau directly; the rescaling keeps every
        # ratio >= 1 and avoids underflow of rho^tau for small rho.
        M = A / rho
        P = np.eye(A.shape[0])
        best, best_tau = 1.0, 0
        for tau in range(1, tau_max + 1):
            P = P @ M
            r = float(np.linalg.norm(P, 2))
            if r > best:
                best, best_tau = r, tau
        result = (best, best_tau)
    return result if full_output else result[0]


def dlyap(A, Q, tol: float = 1e-14, max_doublings: int = 200) -> np.ndarray:
    """Solve the discrete Lyapunov equation X = A X A* + Q for stable A.

    Uses the direct Kronecker (vectorization) solver for n <= 50 and a
    squaring (doubling) iteration above, so there is no truncation-length
    hyperparameter.  The result is symmetrized before returning.
    """
    A = _as_matrix(A, "A")
    Q = _as_matrix(Q, "Q")
    n = A.shape[0]
    if A.shape != (n, n) or Q.shape != (n, n):
        raise ValueError("A and Q must be square matrices of the same size")
    if n <= 50:
        X = scipy.linalg.solve_discrete_lyapunov(A, Q, method="direct")
    else:
        X = Q.copy()
        Ak = A.copy()
        for _ in range(max_doublings):
            inc = Ak @ X @ Ak.T
            X = X + inc
            Ak = Ak @ Ak
            if np.linalg.norm(inc, "fro") <= tol * max(np.linalg.norm(X, "fro"), 1e-300):
                break
        else:
            raise UnstableSystemError("doubling iteration for the Lyapunov solve did not converge")
    return (X + X.T) / 2.0


def steady_state_cov(sys: StateSpace, noise: NoiseModel) -> np.ndarray:
    """Steady-state covariance of the hidden state under the noise model.

    Solves G = A G A* + sigma_w^2 I + sigma_u^2 B B*, the closed form of the
    infinite series of propagated input/process-noise covariances.  Requires
    a stable A; the result is symmetric positive semidefinite.
    """
    rho = spectral_radius(sys.A)
    if rho >= 1:
        raise UnstableSystemError(
            f"steady-state covariance series diverges for rho(A)={rho:.4g} >= 1")
    Q = noise.sigma_w ** 2 * np.eye(sys.n) + noise.sigma_u ** 2 * (sys.B @ sys.B.T)
    return dlyap(sys.A, Q)


def noise_response_map(sys: StateSpace, T: int) -> np.ndarray:
    """Map from the stacked length-T process-noise window to the output.

    Returns the m x (T n) matrix [0, C, CA, ..., C A^(T-2)]: block k multiplies
    the process noise k steps in the past.
    """
    if T < 1:
        raise ValueError(f"horizon T must be >= 1, got {T}")
    F = np.zeros((sys.m, T * sys.n))
    Ck = sys.C
    for k in range(1, T):
        F[:, k * sys.n:(k + 1) * sys.n] = Ck
        Ck = Ck @ sys.A
    return F


@dataclass(frozen=True, eq=False)
class SystemStats:
    """System constants entering the finite-sample bounds at horizon T.

    ``sigma_e`` is the effective standard deviation of the truncation error
    caused by the unknown state T-1 steps in the past; it vanishes whenever
    C A^(T-1) = 0.  ``noise_map_norm`` / ``noise_map_fro`` are the spectral
    and Frobenius norms of :func:`noise_response_map`.
    """

    rho: float
    phi: float
    phi_tau: int
    state_cov: np.ndarray
    state_cov_norm: float
    sigma_e: float
    noise_map_norm: float
    noise_map_fro: float
    trunc_gain: float
    horizon: int

    def __post_init__(self):
        object.__setattr__(self, "state_cov", _freeze(self.state_cov))


def system_stats(sys: StateSpace, noise: NoiseModel, T: int, tau_max: int = 200) -> SystemStats:
    """Compute every bound-relevant constant of ``sys`` at horizon ``T``."""
    if T < 1:
        raise ValueError(f"horizon T must be >= 1, got {T}")
    rho = spectral_radius(sys.A)
    if rho >= 1:
        raise UnstableSystemError(f"system constants require rho(A) < 1, got {rho:.4g}")
    phi, phi_tau = phi_ratio(sys.A, tau_max=tau_max, full_output=True)
    gamma = steady_state_cov(sys, noise)
    gamma_norm = float(np.linalg.norm(gamma, 2))
    trunc_gain = float(np.linalg.norm(sys.C @ np.linalg.matrix_power(sys.A, T - 1), 2))
    if trunc_gain == 0.0:
        sigma_e = 0.0
    else:
        sigma_e = phi * trunc_gain * np.sqrt(T * gamma_norm / (1.0 - rho ** (2 * T)))
    F = noise_response_map(sys, T)
    return SystemStats(
        rho=rho,
        phi=float(phi),
        phi_tau=int(phi_tau),
        state_cov=gamma,
        state_cov_norm=gamma_norm,
        sigma_e=float(sigma_e),
        noise_map_norm=float(np.linalg.norm(F, 2)),
        noise_map_fro=float(np.linalg.norm(F, "fro")),
        trunc_gain=trunc_gain,
        horizon=int(T),
    )
