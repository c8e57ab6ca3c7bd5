"""Markov parameter container shared by the simulation and estimation layers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class MarkovParams:
    """Ordered impulse-response blocks of an LTI system.

    ``blocks[0]`` is the feedthrough matrix, ``blocks[k]`` for k >= 1 is the
    response C A^(k-1) B.  All blocks share the same (m, p) shape; the
    concatenation ``matrix`` is the m x (T p) regression target.
    """

    blocks: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.blocks) < 1:
            raise ValueError("MarkovParams needs at least one block")
        frozen = tuple(_freeze(np.atleast_2d(b)) for b in self.blocks)
        shape = frozen[0].shape
        for k, b in enumerate(frozen):
            if b.shape != shape:
                raise ValueError(f"block {k} has shape {b.shape}, expected {shape}")
        object.__setattr__(self, "blocks", frozen)

    @property
    def m(self) -> int:
        return self.blocks[0].shape[0]

    @property
    def p(self) -> int:
        return self.blocks[0].shape[1]

    @property
    def T(self) -> int:
        return len(self.blocks)

    @property
    def matrix(self) -> np.ndarray:
        """Blocks concatenated horizontally into an m x (T p) matrix."""
        return np.hstack(self.blocks)

    @classmethod
    def from_matrix(cls, mat: np.ndarray, p: int) -> "MarkovParams":
        """Split an m x (T p) matrix into T blocks of width p."""
        mat = np.atleast_2d(np.asarray(mat, dtype=float))
        if p < 1 or mat.shape[1] % p != 0:
            raise ValueError(f"matrix width {mat.shape[1]} is not a multiple of p={p}")
        T = mat.shape[1] // p
        return cls(tuple(mat[:, k * p:(k + 1) * p] for k in range(T)))

    def prefix(self, T: int) -> "MarkovParams":
        """First ``T`` blocks as a new instance."""
        if not 1 <= T <= self.T:
            raise ValueError(f"prefix length {T} outside [1, {self.T}]")
        return MarkovParams(self.blocks[:T])
