"""Deviation-maximization column selection.

The selector picks a block of trailing-matrix columns that are long (norm at
least tau times the current maximum) and mutually well separated (pairwise
cosines below delta in magnitude).  Such a block is provably well conditioned:
if the selected cosine submatrix is strictly diagonally dominant with gap
gamma > 1 - tau^2, then

    sigma_min(C) >= sqrt(gamma + tau^2 - 1) * max_j ||c_j||.

``lemma1_certificate`` evaluates that bound; ``dm_select`` performs the
selection itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .matrix import column_norms

__all__ = [
    "DMParams",
    "DMSelection",
    "NormFloorSignal",
    "candidate_set",
    "cosine_matrix",
    "dm_select",
    "lemma1_certificate",
]


class NormFloorSignal(Exception):
    """All trailing column norms sit at round-off level; block selection would
    need reciprocals of those norms, so the caller must fall back to scalar
    pivoting."""


@dataclass(frozen=True)
class DMParams:
    """Knobs of the selection rule.

    tau is the norm threshold in (0, 1], delta the cosine threshold in [0, 1),
    k_dm caps the candidate-set cardinality (and hence the block size), and
    use_delta_max replaces delta with tau^2/(k_max - 1), the largest value for
    which the diagonal-dominance certificate is guaranteed.
    """

    tau: float = 0.15
    delta: float = 0.9
    k_dm: int = 64
    use_delta_max: bool = False

    def __post_init__(self):
        if not 0.0 < self.tau <= 1.0:
            raise ValueError(f"tau must be in (0, 1], got {self.tau}")
        if not 0.0 <= self.delta < 1.0:
            raise ValueError(f"delta must be in [0, 1), got {self.delta}")
        if self.k_dm < 1:
            raise ValueError(f"k_dm must be >= 1, got {self.k_dm}")


@dataclass
class DMSelection:
    """Outcome of one selection: ordered indices into the trailing view (seed
    first), the candidate-set cardinality that entered the cosine filter, and
    the diagonal-dominance gap of the selected cosine submatrix (may drop to or
    below 1 - tau^2 when delta is loose; that is diagnostic, not an error)."""

    indices: list[int]
    k_max: int
    gamma: float

    @property
    def k(self) -> int:
        return len(self.indices)


def candidate_set(u, tau: float, k_dm: int) -> tuple[int, list[int], int]:
    """Split norms into the seed (argmax) and the candidate list.

    Candidates are the non-seed indices with u_i >= tau * max(u), sorted by
    descending norm (ties to the smaller index), truncated to the k_dm largest.
    Returns (seed, candidates, k_max) with k_max the truncated cardinality.
    """
    u = np.asarray(u, dtype=np.float64)
    if u.size == 0 or np.max(u) <= 0.0:
        raise ValueError("candidate set undefined: all norms are zero")
    seed = int(np.argmax(u))
    umax = u[seed]
    idx = np.flatnonzero(u >= tau * umax)
    idx = idx[idx != seed]
    order = np.argsort(-u[idx], kind="stable")
    cand = [int(i) for i in idx[order][:k_dm]]
    return seed, cand, len(cand)


def cosine_matrix(C: np.ndarray) -> np.ndarray:
    """Cosines of the angles between all column pairs of C.

    Computed Gram-first (G = C^T C, then the two-sided diagonal scaling), which
    needs no m x k temporary.  Only the strict upper triangle is authoritative;
    it is mirrored and the diagonal pinned to exactly 1.
    """
    nrm = column_norms(C)
    if np.any(nrm == 0.0):
        raise ValueError("cosine matrix undefined: zero column present")
    G = C.T @ C
    inv = 1.0 / nrm
    upper = np.triu(G * inv[:, None] * inv[None, :], 1)
    out = upper + upper.T
    np.fill_diagonal(out, 1.0)
    return out


def dm_select(
    trailing: np.ndarray,
    u,
    params: DMParams,
    norm_floor: float = 0.0,
) -> DMSelection:
    """Select a block of well-separated long columns from the trailing matrix.

    u carries the (partial) norms of the trailing columns.  The seed is the
    argmax of u; candidates are visited in descending-norm order and index i
    joins the selection iff its cosine against every already-selected column
    stays below delta in magnitude.

    With use_delta_max set, delta becomes tau^2/(k_max - 1) and an additional
    running row-sum guard keeps every absolute cosine row sum of the selected
    submatrix strictly below tau^2, so gamma > 1 - tau^2 holds by construction
    (the plain cardinality argument leaves corner cases open when every
    candidate passes the filter).

    Raises NormFloorSignal when max(u) <= norm_floor.
    """
    u = np.asarray(u, dtype=np.float64)
    if u.size == 0 or np.max(u) <= norm_floor:
        raise NormFloorSignal(
            f"max trailing norm {np.max(u) if u.size else 0.0} at or below floor {norm_floor}"
        )
    seed, cand, k_max = candidate_set(u, params.tau, params.k_dm)
    if not cand:
        return DMSelection([seed], 0, 1.0)

    cols = [seed] + cand
    theta = cosine_matrix(trailing[:, cols])

    if params.use_delta_max:
        delta = params.tau**2 / max(k_max - 1, 1)
        guard = params.tau**2
    else:
        delta = params.delta
        guard = None

    chosen = [0]  # positions within `cols`; 0 is the seed
    row_sum = {0: 0.0}
    for t in range(1, len(cols)):
        gains = np.abs(theta[t, chosen])
        if not np.all(gains < delta):
            continue
        if guard is not None:
            total = float(gains.sum())
            if total >= guard or any(
                row_sum[j] + abs(theta[j, t]) >= guard for j in chosen
            ):
                continue
            for j in chosen:
                row_sum[j] += abs(theta[j, t])
            row_sum[t] = total
        chosen.append(t)

    sub = np.abs(theta[np.ix_(chosen, chosen)])
    gamma = float(np.min(1.0 - (sub.sum(axis=1) - 1.0)))
    return DMSelection([cols[t] for t in chosen], k_max, gamma)


def lemma1_certificate(C: np.ndarray, tau: float) -> tuple[float, float, bool]:
    """Lower bound on sigma_min(C) from diagonal dominance of the cosine matrix.

    Requires nonzero columns with the first attaining the maximum norm.
    Returns (gamma, bound, holds): when gamma > 1 - tau^2 the certificate
    applies and bound = sqrt(gamma + tau^2 - 1) * ||c_1||, a guaranteed lower
    bound on sigma_min(C); otherwise bound = 0 and holds is False (the
    hypothesis failed, nothing is claimed).
    """
    nrm = column_norms(C)
    if np.any(nrm == 0.0):
        raise ValueError("certificate undefined: zero column present")
    if nrm[0] < nrm.max():
        raise ValueError("first column must attain the maximum norm")
    theta = cosine_matrix(C)
    off = np.abs(theta).sum(axis=1) - 1.0
    gamma = float(np.min(1.0 - off))
    if gamma > 1.0 - tau * tau:
        return gamma, math.sqrt(gamma + tau * tau - 1.0) * float(nrm[0]), True
    return gamma, 0.0, False
