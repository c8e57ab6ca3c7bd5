"""Block Hankel matrices and the Ho-Kalman balanced realization.

The realization is obtained by splitting the rank-n SVD of the clipped
Hankel matrix into balanced observability/controllability factors and
solving for the state matrix through the shifted Hankel matrix.  A separate
singular-value clipping step projects an estimated state matrix onto the
stable set; it is never applied inside the realization itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import RankDeficientError
from .markov import MarkovParams, _freeze
from .systems import StateSpace

__all__ = [
    "BlockHankel",
    "RealizationResult",
    "build_hankel",
    "build_padded_hankel",
    "split_hankel",
    "rank_n_approx",
    "ho_kalman",
    "clip_singular_values",
    "suggest_order",
    "hankel_shape",
]


@dataclass(frozen=True, eq=False)
class BlockHankel:
    """T1 x T2 grid of m x p blocks where block (i, j) depends only on i + j.

    ``blocks`` has shape (T1, T2, m, p); ``matrix`` is the dense
    (T1 m) x (T2 p) view.  ``source`` keeps a reference to the Markov
    parameters the matrix was built from, when applicable.
    """

    blocks: np.ndarray
    source: Optional[MarkovParams] = None

    def __post_init__(self):
        arr = np.asarray(self.blocks, dtype=float)
        if arr.ndim != 4:
            raise ValueError(f"blocks must be a (T1, T2, m, p) array, got ndim={arr.ndim}")
        object.__setattr__(self, "blocks", _freeze(arr))

    @property
    def T1(self) -> int:
        return self.blocks.shape[0]

    @property
    def T2(self) -> int:
        return self.blocks.shape[1]

    @property
    def m(self) -> int:
        return self.blocks.shape[2]

    @property
    def p(self) -> int:
        return self.blocks.shape[3]

    @property
    def matrix(self) -> np.ndarray:
        T1, T2, m, p = self.blocks.shape
        return self.blocks.transpose(0, 2, 1, 3).reshape(T1 * m, T2 * p)

    def block(self, i: int, j: int) -> np.ndarray:
        """Block at 0-based grid position (i, j)."""
        return self.blocks[i, j]


def build_hankel(params: MarkovParams, T1: int, T2: int) -> BlockHankel:
    """Clipped block Hankel matrix of shape (T1, T2) blocks.

    Block (i, j) (1-based) is the Markov block with index i + j, so the
    feedthrough block (index 1) never appears and T1 + T2 <= T is required.
    """
    if min(T1, T2) < 1:
        raise ValueError(f"T1 and T2 must be >= 1, got ({T1}, {T2})")
    if T1 + T2 > params.T:
        raise ValueError(
            f"Hankel shape ({T1}, {T2}) needs T1 + T2 <= T = {params.T}")
    stacked = np.stack(params.blocks)
    idx = np.add.outer(np.arange(T1), np.arange(T2)) + 1
    return BlockHankel(blocks=stacked[idx], source=params)


def build_padded_hankel(params: MarkovParams, K: int) -> BlockHankel:
    """K x K block Hankel matrix starting at the feedthrough block, zero padded.

    Block (i, j) (1-based) is the Markov block with index i + j - 1 when that
    index is at most T and a zero block otherwise.  Requires K >= T; since the
    padding is zero, the spectral norm does not depend on K.
    """
    if K < params.T:
        raise ValueError(f"padded horizon K={K} must be >= T={params.T}")
    stacked = np.stack(params.blocks)
    pad = np.zeros((2 * K - 1 - params.T, params.m, params.p))
    extended = np.concatenate([stacked, pad], axis=0)
    idx = np.add.outer(np.arange(K), np.arange(K))
    return BlockHankel(blocks=extended[idx], source=params)


def split_hankel(H: BlockHankel) -> tuple[BlockHankel, BlockHankel]:
    """Drop the last / first block column: (H_minus, H_plus).

    Both halves have one block column fewer than the input; the input must
    have at least two block columns.
    """
    if H.T2 < 2:
        raise ValueError("splitting needs at least 2 block columns")
    return (BlockHankel(blocks=H.blocks[:, :-1], source=H.source),
            BlockHankel(blocks=H.blocks[:, 1:], source=H.source))


def rank_n_approx(M: np.ndarray, n: int) -> np.ndarray:
    """Best rank-n approximation of a matrix (optimal in spectral and
    Frobenius norm), via SVD truncation."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if not 1 <= n <= min(M.shape):
        raise ValueError(f"rank {n} outside [1, {min(M.shape)}]")
    u, s, vt = np.linalg.svd(M, full_matrices=False)
    return (u[:, :n] * s[:n]) @ vt[:n]


def _fix_svd_signs(u: np.ndarray, vt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Deterministic SVD: make the first non-negligible coordinate of each left
    # singular vector positive (raw SVD signs depend on the backend).
    u = u.copy()
    vt = vt.copy()
    for k in range(u.shape[1]):
        col = u[:, k]
        scale = np.max(np.abs(col))
        if scale == 0.0:
            continue
        j = int(np.argmax(np.abs(col) > 1e-12 * scale))
        if col[j] < 0:
            u[:, k] = -col
            vt[k] = -vt[k]
    return u, vt


@dataclass(frozen=True, eq=False)
class RealizationResult:
    """Balanced state-space realization recovered from Markov parameters.

    ``obs_factor`` (T1 m x n) and ``ctrl_factor`` (n x T2 p) are the balanced
    observability/controllability factors; their product is the rank-n
    approximation of the clipped Hankel matrix.  ``sigma`` holds the top-n
    Hankel singular values in descending order and ``sigma_min`` the n-th one,
    which governs the robustness of the realization.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    obs_factor: np.ndarray
    ctrl_factor: np.ndarray
    sigma: np.ndarray
    sigma_min: float
    order: int
    shape: tuple[int, int]

    def __post_init__(self):
        for name in ("A", "B", "C", "D", "obs_factor", "ctrl_factor", "sigma"):
            object.__setattr__(self, name, _freeze(getattr(self, name)))

    def to_statespace(self) -> StateSpace:
        return StateSpace(self.A, self.B, self.C, self.D)


def ho_kalman(params: MarkovParams, n: int, T1: int, T2: int) -> RealizationResult:
    """Ho-Kalman balanced realization of order ``n`` from Markov parameters.

    Builds the clipped Hankel matrix with T1 block rows and T2 + 1 block
    columns (so T1 + T2 + 1 must equal T), takes the rank-n approximation of
    the first T2 block columns, splits its SVD into balanced factors, and
    solves for the state matrix through the last T2 block columns:

        O = U sqrt(S), Q = sqrt(S) V*, C = first m rows of O,
        B = first p columns of Q, A = pinv(O) H_plus pinv(Q).

    The pseudo-inverses are formed from the SVD factors directly.  Raises
    :class:`RankDeficientError` if the Hankel matrix cannot support order n.
    """
    T = params.T
    if T1 + T2 + 1 != T:
        raise ValueError(
            f"Hankel split ({T1}, {T2}) must satisfy T1 + T2 + 1 = T = {T}")
    m, p = params.m, params.p
    if not 1 <= n <= min(m * T1, p * T2):
        raise ValueError(
            f"order n={n} outside [1, min(m*T1, p*T2) = {min(m * T1, p * T2)}]")

    H = build_hankel(params, T1, T2 + 1)
    H_minus, H_plus = split_hankel(H)
    u, s, vt = np.linalg.svd(H_minus.matrix, full_matrices=False)
    cutoff = np.finfo(float).eps * (s[0] if s.size else 0.0) * max(H_minus.matrix.shape)
    achieved = int(np.sum(s > cutoff))
    if achieved < n:
        raise RankDeficientError(requested=n, achieved=achieved)
    u, vt = _fix_svd_signs(u[:, :n], vt[:n])
    sqrt_s = np.sqrt(s[:n])
    obs = u * sqrt_s
    ctrl = sqrt_s[:, None] * vt
    C = obs[:m]
    B = ctrl[:, :p]
    # pinv(O) = S^(-1/2) U*, pinv(Q) = V S^(-1/2): exact for the rank-n factors.
    A = (u / sqrt_s).T @ H_plus.matrix @ (vt.T / sqrt_s)
    return RealizationResult(
        A=A, B=B, C=C, D=params.blocks[0],
        obs_factor=obs, ctrl_factor=ctrl,
        sigma=s[:n], sigma_min=float(s[n - 1]),
        order=n, shape=(T1, T2),
    )


def clip_singular_values(M: np.ndarray, bound: float) -> np.ndarray:
    """Clip the singular values of a matrix at ``bound``.

    Singular vectors are unchanged; any singular value above the bound is
    replaced by it, which projects an estimated state matrix onto the set of
    matrices with spectral norm at most ``bound``.
    """
    if bound <= 0:
        raise ValueError(f"clip bound must be positive, got {bound}")
    M = np.atleast_2d(np.asarray(M, dtype=float))
    u, s, vt = np.linalg.svd(M, full_matrices=False)
    return (u * np.minimum(s, bound)) @ vt


def suggest_order(params: MarkovParams, T1: int, T2: int, tol: float = 1e-8) -> int:
    """Suggested system order: singular values of the clipped Hankel matrix
    above ``tol`` times the largest one.  Advisory only; the realization
    order is always chosen by the caller."""
    H = build_hankel(params, T1, T2)
    s = np.linalg.svd(H.matrix, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


def hankel_shape(T: int, m: int | None = None, p: int | None = None,
                 policy: str = "half") -> tuple[int, int]:
    """Default (T1, T2) split for :func:`ho_kalman` at horizon ``T``.

    ``"half"`` makes the built Hankel matrix as square in blocks as possible:
    T1 = ceil(T/2) block rows and T - T1 block columns (so T2 = T - T1 - 1).
    ``"balanced"`` instead picks T1 so that the dense row and column counts
    m*T1 and p*(T2+1) are as close as possible, which can improve noise
    robustness for lopsided (m, p).
    """
    if T < 3:
        raise ValueError(f"realization needs T >= 3, got {T}")
    if policy == "half":
        T1 = (T + 1) // 2
    elif policy == "balanced":
        if m is None or p is None:
            raise ValueError("balanced shape policy needs m and p")
        candidates = range(1, T - 1)
        T1 = min(candidates, key=lambda t1: (abs(m * t1 - p * (T - t1)), t1))
    else:
        raise ValueError(f"unknown hankel shape policy: {policy!r}")
    return T1, T - T1 - 1
