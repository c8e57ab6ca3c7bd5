"""Least-squares recovery of Markov parameters from a single trajectory.

The regression stacks reversed input windows against outputs; the minimum
Frobenius-norm solution (pseudo-inverse) is used whenever the normal matrix
is singular, and a conditioning report accompanies every estimate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .exceptions import InsufficientDataError
from .markov import MarkovParams, _freeze
from .systems import NoiseModel, StateSpace, Trajectory, noise_response_map, steady_state_cov

__all__ = [
    "RegressionData",
    "Conditioning",
    "build_regression",
    "least_squares_markov",
    "predict_output",
    "prediction_error_bound",
]


@dataclass(frozen=True, eq=False)
class RegressionData:
    """Label matrix Y (N x m) and data matrix U (N x T p).

    Row k of U is the reversed input window
    [u_{T+k-1}*, u_{T+k-2}*, ..., u_k*] (1-based time), so N = len(traj) - T + 1.
    """

    Y: np.ndarray
    U: np.ndarray
    N: int
    T: int

    def __post_init__(self):
        object.__setattr__(self, "Y", _freeze(self.Y))
        object.__setattr__(self, "U", _freeze(self.U))
        if self.Y.shape[0] != self.N or self.U.shape[0] != self.N:
            raise ValueError("row counts of Y and U must equal N")
        if self.U.shape[1] % self.T != 0:
            raise ValueError("U width must be a multiple of the horizon T")

    @property
    def p(self) -> int:
        return self.U.shape[1] // self.T

    @property
    def m(self) -> int:
        return self.Y.shape[1]

    def prefix(self, N: int) -> "RegressionData":
        """Regression built from the first N windows only."""
        if not 1 <= N <= self.N:
            raise ValueError(f"prefix length {N} outside [1, {self.N}]")
        return RegressionData(Y=self.Y[:N], U=self.U[:N], N=N, T=self.T)


class Conditioning(NamedTuple):
    """Extreme singular values of the data matrix U."""

    sigma_min: float
    sigma_max: float


def build_regression(traj: Trajectory, T: int) -> RegressionData:
    """Assemble the output/window regression for horizon ``T``.

    The label rows are y_T .. y_Nbar and the data rows are the reversed input
    windows ending at the same times.
    """
    if T < 1:
        raise ValueError(f"horizon T must be >= 1, got {T}")
    u, y = traj.inputs, traj.outputs
    nbar = u.shape[0]
    if nbar < T:
        raise InsufficientDataError(
            f"trajectory of length {nbar} cannot support horizon T={T}")
    N = nbar - T + 1
    p = u.shape[1]
    U = np.empty((N, T * p))
    for j in range(T):
        U[:, j * p:(j + 1) * p] = u[T - 1 - j:T - 1 - j + N]
    return RegressionData(Y=y[T - 1:], U=U, N=N, T=T)


def least_squares_markov(data: RegressionData) -> tuple[MarkovParams, Conditioning]:
    """Least-squares Markov parameter estimate with conditioning report.

    Solves min_X ||Y - U X*||_F via the SVD pseudo-inverse; singular values
    below eps * sigma_max * max(N, Tp) are treated as zero, which yields the
    minimum-Frobenius-norm solution when U is rank deficient.  The estimate is
    returned block-wise together with (sigma_min(U), sigma_max(U)).
    """
    U, Y = data.U, data.Y
    u_svd, s, vt = np.linalg.svd(U, full_matrices=False)
    sigma_max = float(s[0]) if s.size else 0.0
    sigma_min = float(s[-1]) if s.size else 0.0
    cutoff = np.finfo(float).eps * sigma_max * max(U.shape)
    inv_s = np.where(s > cutoff, 1.0 / np.where(s > cutoff, s, 1.0), 0.0)
    coeff = vt.T @ ((u_svd.T @ Y) * inv_s[:, None])  # (Tp, m) = pinv(U) @ Y
    params = MarkovParams.from_matrix(coeff.T, data.p)
    return params, Conditioning(sigma_min=sigma_min, sigma_max=sigma_max)


def predict_output(params: MarkovParams, u_window) -> np.ndarray:
    """One-step output prediction from a reversed input window.

    ``u_window`` must have length T*p and use the same reversed layout as the
    regression rows (most recent input first).
    """
    w = np.ravel(np.asarray(u_window, dtype=float))
    if w.size != params.T * params.p:
        raise ValueError(
            f"window length {w.size} does not match T*p = {params.T * params.p}")
    return params.matrix @ w


def prediction_error_bound(sys: StateSpace, noise: NoiseModel, T: int,
                           markov_err_frob: float) -> float:
    """Mean squared one-step prediction error bound for a window predictor.

    Sums the process-noise response power, the input-times-estimation-error
    power, the measurement noise floor, and the leakage of the unknown state
    from before the window:

        sigma_w^2 ||F||_F^2 + sigma_u^2 err^2 + m sigma_z^2
            + ||C A^(T-1)||^2 trace(state_cov)

    where F is :func:`noise_response_map`.
    """
    F = noise_response_map(sys, T)
    gamma = steady_state_cov(sys, noise)
    trunc_gain = np.linalg.norm(sys.C @ np.linalg.matrix_power(sys.A, T - 1), 2)
    return float(
        noise.sigma_w ** 2 * np.linalg.norm(F, "fro") ** 2
        + noise.sigma_u ** 2 * float(markov_err_frob) ** 2
        + sys.m * noise.sigma_z ** 2
        + trunc_gain ** 2 * np.trace(gamma)
    )
