"""Dense column-major matrix kernels shared by all factorization code.

Matrices are plain float64 numpy arrays held in Fortran (column-major) order;
every hot loop in the package walks columns, so unit stride within a column is
the one storage invariant everything else relies on.  Submatrix views are
ordinary numpy slices of such arrays.  ``dense`` is the checked constructor
used at every external boundary.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "dense",
    "gemm",
    "column_norms",
    "Permutation",
    "swap_columns",
    "apply_column_swaps",
]


def dense(a) -> np.ndarray:
    """Copy external input into a validated column-major float64 matrix.

    Raises ValueError if the input is not 2-d or carries NaN/Inf entries.
    """
    m = np.array(a, dtype=np.float64, order="F")
    if m.ndim != 2:
        raise ValueError(f"expected a 2-d array, got ndim={m.ndim}")
    if m.size and not np.isfinite(m).all():
        raise ValueError("matrix contains NaN or Inf entries")
    return m


def gemm(alpha: float, A: np.ndarray, B: np.ndarray, beta: float, C: np.ndarray) -> None:
    """General matrix multiply-accumulate: C <- alpha*A@B + beta*C, in place.

    C must not alias A or B.
    """
    if A.ndim != 2 or B.ndim != 2 or C.ndim != 2:
        raise ValueError("gemm operands must be 2-d")
    if A.shape[1] != B.shape[0] or C.shape != (A.shape[0], B.shape[1]):
        raise ValueError(
            f"gemm dimension mismatch: {A.shape} @ {B.shape} -> {C.shape}"
        )
    if np.shares_memory(C, A) or np.shares_memory(C, B):
        raise ValueError("gemm output must be disjoint from its inputs")
    if alpha == 0.0:
        C *= beta
        return
    prod = A @ B
    if beta == 0.0:
        C[...] = alpha * prod
    else:
        C *= beta
        C += alpha * prod


def column_norms(A: np.ndarray) -> np.ndarray:
    """Euclidean norm of every column, robust against overflow/underflow.

    Two accumulators per column: the running max magnitude (scale) and the sum
    of squares of the rescaled entries.
    """
    if A.ndim == 1:
        A = A[:, None]
    n = A.shape[1]
    out = np.zeros(n)
    if A.shape[0] == 0 or n == 0:
        return out
    scale = np.abs(A).max(axis=0)
    nz = scale > 0.0
    if np.any(nz):
        scaled = A[:, nz] / scale[nz]
        out[nz] = scale[nz] * np.sqrt(np.einsum("ij,ij->j", scaled, scaled))
    return out


def swap_columns(A: np.ndarray, i: int, j: int) -> None:
    """Exchange columns i and j in place (one column of scratch)."""
    if i == j:
        return
    tmp = A[:, i].copy()
    A[:, i] = A[:, j]
    A[:, j] = tmp


class Permutation:
    """A column permutation tracked as a forward map plus the swap log behind it.

    ``forward[k]`` is the original index of the column now sitting at position
    k, i.e. permuting ``A`` gives ``A[:, forward]``.  Replaying the swap log
    from the identity always reproduces ``forward``.
    """

    def __init__(self, n: int):
        self.forward = np.arange(n, dtype=np.intp)
        self.swaps: list[tuple[int, int]] = []

    @classmethod
    def from_forward(cls, forward) -> "Permutation":
        forward = np.asarray(forward, dtype=np.intp)
        n = forward.size
        if not np.array_equal(np.sort(forward), np.arange(n)):
            raise ValueError("forward map is not a bijection")
        p = cls(n)
        # decompose into transpositions so the swap-log invariant holds
        work = np.arange(n, dtype=np.intp)
        pos = np.arange(n, dtype=np.intp)  # pos[v] = current slot of value v
        for k in range(n):
            want = forward[k]
            if work[k] != want:
                j = pos[want]
                p.swap(k, int(j))
                pos[work[k]], pos[work[j]] = j, k
                work[k], work[j] = work[j], work[k]
        return p

    @property
    def n(self) -> int:
        return int(self.forward.size)

    def swap(self, i: int, j: int) -> None:
        """Record and apply the transposition (i, j)."""
        if not (0 <= i < self.n and 0 <= j < self.n):
            raise ValueError(f"swap index out of range: ({i}, {j})")
        if i == j:
            return
        self.forward[i], self.forward[j] = self.forward[j], self.forward[i]
        self.swaps.append((i, j))

    def replay(self) -> np.ndarray:
        """Rebuild the forward map from the swap log alone."""
        fwd = np.arange(self.n, dtype=np.intp)
        for i, j in self.swaps:
            fwd[i], fwd[j] = fwd[j], fwd[i]
        return fwd

    def inverse(self) -> np.ndarray:
        inv = np.empty(self.n, dtype=np.intp)
        inv[self.forward] = np.arange(self.n, dtype=np.intp)
        return inv

    def __eq__(self, other) -> bool:
        return isinstance(other, Permutation) and np.array_equal(
            self.forward, other.forward
        )

    def __repr__(self) -> str:
        return f"Permutation({list(self.forward)})"


def apply_column_swaps(A: np.ndarray, p: Permutation) -> None:
    """Permute the columns of A in place so that column k becomes A[:, p.forward[k]].

    Runs as a sequence of cyclic shifts using a single column-sized scratch
    buffer.
    """
    fwd = p.forward
    if A.shape[1] != fwd.size:
        raise ValueError(f"permutation length {fwd.size} != column count {A.shape[1]}")
    visited = np.zeros(fwd.size, dtype=bool)
    scratch = np.empty(A.shape[0])
    for start in range(fwd.size):
        if visited[start] or fwd[start] == start:
            visited[start] = True
            continue
        scratch[:] = A[:, start]
        dst = start
        while True:
            src = int(fwd[dst])
            visited[dst] = True
            if src == start:
                A[:, dst] = scratch
                break
            A[:, dst] = A[:, src]
            dst = src
