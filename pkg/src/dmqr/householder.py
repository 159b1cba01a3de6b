"""Householder reflectors and their compact blocked aggregation.

A reflector is stored in the usual essential form: v has first entry 1 and
H = I - coeff*v*v^T.  A block of k reflectors with stepwise-shrinking essential
parts aggregates into the compact pair (Y, W) with

    H_1 H_2 ... H_k = I - Y W Y^T,

Y lower-trapezoidal (m x k) and W upper-triangular (k x k).  Applying the
transposed product to a trailing matrix is then three matrix-matrix products,
which is the whole point of blocking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .matrix import gemm

__all__ = [
    "Reflector",
    "ReflectorBlock",
    "make_reflector",
    "apply_reflector_left",
    "accumulate_wy",
    "apply_block_left",
]


@dataclass
class Reflector:
    v: np.ndarray  # essential vector, v[0] == 1
    coeff: float   # H = I - coeff * v v^T; 0 means identity

    @property
    def dim(self) -> int:
        return int(self.v.size)


@dataclass
class ReflectorBlock:
    Y: np.ndarray  # m x k, lower-trapezoidal, unit "diagonal" at (j, j)
    W: np.ndarray  # k x k, upper-triangular

    @property
    def dim(self) -> int:
        return int(self.Y.shape[0])

    @property
    def k(self) -> int:
        return int(self.Y.shape[1])


def make_reflector(x) -> tuple[Reflector, float]:
    """Build the reflector annihilating x below its first entry.

    Returns (reflector, beta) with H @ x == (beta, 0, ..., 0); |beta| = ||x||
    and beta takes the sign opposite to x[0] so u = x - beta*e1 never cancels.
    A zero vector yields the identity reflector with beta = 0.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("reflector input must be a nonempty vector")
    v = np.zeros(x.size)
    v[0] = 1.0
    amax = np.abs(x).max()
    if amax == 0.0:
        return Reflector(v, 0.0), 0.0
    scaled = x / amax
    nrm = amax * math.sqrt(float(scaled @ scaled))
    beta = -math.copysign(nrm, x[0]) if x[0] != 0.0 else -nrm
    u0 = x[0] - beta
    if x.size > 1:
        v[1:] = x[1:] / u0
    coeff = (beta - x[0]) / beta
    return Reflector(v, coeff), beta


def apply_reflector_left(r: Reflector, C: np.ndarray) -> None:
    """C <- H @ C as a rank-1 update, in place."""
    if C.shape[0] != r.dim:
        raise ValueError(f"reflector dim {r.dim} != row count {C.shape[0]}")
    if r.coeff == 0.0:
        return
    w = r.coeff * (r.v @ C)
    C -= np.outer(r.v, w)


def accumulate_wy(reflectors: list[Reflector]) -> ReflectorBlock:
    """Aggregate reflectors into the compact (Y, W) pair by forward recursion.

    Reflector j must have essential length m - j (the triangular pattern left
    behind by a panel factorization).
    """
    if not reflectors:
        raise ValueError("cannot accumulate an empty reflector list")
    m = reflectors[0].dim
    k = len(reflectors)
    Y = np.zeros((m, k), order="F")
    W = np.zeros((k, k), order="F")
    for j, r in enumerate(reflectors):
        if r.dim != m - j:
            raise ValueError(
                f"reflector {j} has essential length {r.dim}, expected {m - j}"
            )
        Y[j:, j] = r.v
        if j:
            z = Y[j:, :j].T @ r.v
            W[:j, j] = -r.coeff * (W[:j, :j] @ z)
        W[j, j] = r.coeff
    return ReflectorBlock(Y, W)


def apply_block_left(block: ReflectorBlock, C: np.ndarray) -> None:
    """C <- (I - Y W^T Y^T) @ C, in place.

    This is the transposed aggregate (H_k ... H_1), the orientation a panel
    factorization needs for its trailing update.  Evaluated as three products
    so only a k x cols temporary is ever formed.
    """
    if C.shape[0] != block.dim:
        raise ValueError(f"block dim {block.dim} != row count {C.shape[0]}")
    t = block.Y.T @ C
    t = block.W.T @ t
    gemm(-1.0, block.Y, t, 1.0, C)
