"""Pivoted QR drivers with rank detection.

Three drivers share one storage convention (LAPACK-style packed factor: R in
the upper triangle, essential reflector parts below the diagonal, scalar
coefficients in a separate vector):

* ``qrp``    -- greedy scalar pivoting: at every step the trailing column of
  maximum partial norm moves to the front.
* ``qrdm``   -- block pivoting: deviation maximization selects a group of long,
  mutually well-separated columns, the group is triangularized by scalar
  reflectors, and the rest of the trailing matrix gets one aggregated update.
* ``qrdm2``  -- same, plus a within-block break: once the next selected
  column's residual norm falls below eps_s = tau * (max trailing norm at block
  start), the remaining selected columns are rejected and re-enter the pool.

Partial column norms are downdated rather than recomputed, with a cancellation
guard that refreshes a norm from the matrix whenever the downdated square
drops below a hundredth of its value at the last refresh.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .dm import DMParams, DMSelection, NormFloorSignal, dm_select
from .householder import (
    Reflector,
    accumulate_wy,
    apply_block_left,
    apply_reflector_left,
    make_reflector,
)
from .matrix import Permutation, column_norms, dense, swap_columns

__all__ = [
    "EPS",
    "StopRule",
    "StopCriterion",
    "StepRecord",
    "WorkCounters",
    "PartialNorms",
    "RRQRResult",
    "downdate_norms",
    "check_stop",
    "qrp",
    "qrdm",
    "qrdm2",
    "reconstruct",
]

EPS = float(np.finfo(np.float64).eps)


class StopRule(Enum):
    """Which eps_1 enters the early-termination test (or none at all)."""

    EPS_N = "n"
    EPS_SQRT_N = "sqrt-n"
    NONE = "none"


@dataclass(frozen=True)
class StopCriterion:
    variant: StopRule = StopRule.EPS_N
    epsilon: float = EPS

    @classmethod
    def from_name(cls, name: str) -> "StopCriterion":
        return cls(StopRule(name))

    def eps1(self, n: int) -> float | None:
        if self.variant is StopRule.EPS_N:
            return self.epsilon * n
        if self.variant is StopRule.EPS_SQRT_N:
            return self.epsilon * math.sqrt(n)
        return None


@dataclass
class StepRecord:
    """Diagnostics for one outer step."""

    n_s: int                       # columns already factored when the step began
    k_selected: int                # block size chosen by the selector
    k_accepted: int                # reflectors actually produced (<= k_selected)
    broke_early: bool = False
    fell_back_to_scalar: bool = False
    eps_s: float = 0.0             # residual-length threshold of the break check
    gamma: float = 1.0             # dominance gap of the selected cosine submatrix


@dataclass
class WorkCounters:
    """Analytic flop counts, split by update kind."""

    rank1_flops: float = 0.0
    blocked_flops: float = 0.0
    total_flops: float = 0.0

    @property
    def rank1_fraction(self) -> float:
        return self.rank1_flops / self.total_flops if self.total_flops else 0.0

    @property
    def blocked_fraction(self) -> float:
        return self.blocked_flops / self.total_flops if self.total_flops else 0.0


@dataclass
class PartialNorms:
    """Downdated trailing-column norms plus the state of the cancellation guard.

    u_ref holds each norm's value at its last exact recomputation; a downdate
    that erases more than (1 - recompute_threshold) of the squared reference
    triggers a fresh computation from the matrix.
    """

    u: np.ndarray
    u_ref: np.ndarray
    recompute_threshold: float = 1e-2

    @classmethod
    def from_matrix(cls, A: np.ndarray) -> "PartialNorms":
        u = column_norms(A)
        return cls(u, u.copy())

    def swap(self, i: int, j: int) -> None:
        self.u[i], self.u[j] = self.u[j], self.u[i]
        self.u_ref[i], self.u_ref[j] = self.u_ref[j], self.u_ref[i]


@dataclass
class RRQRResult:
    packed: np.ndarray             # R in the upper triangle, reflectors below
    coeffs: np.ndarray             # reflector coefficients, one per factored column
    perm: Permutation
    rank: int
    step_log: list[StepRecord]
    n_factored: int                # columns actually triangularized
    stopped_early: bool
    counters: WorkCounters = field(default_factory=WorkCounters)
    norm_trace: list[float] = field(default_factory=list)

    @property
    def m(self) -> int:
        return int(self.packed.shape[0])

    @property
    def n(self) -> int:
        return int(self.packed.shape[1])

    def r_diagonal(self) -> np.ndarray:
        """Diagonal of the triangular factor over the factored columns."""
        return self.packed.diagonal()[: self.n_factored].copy()


def downdate_norms(pn: PartialNorms, work: np.ndarray, n_s: int, n_s1: int) -> None:
    """Account rows [n_s, n_s1) of freshly produced R entries into the norms.

    For every column j >= n_s1 the squared norm loses the squares of the new R
    entries; entries j < n_s1 are zeroed.  Columns whose downdated square falls
    at or below recompute_threshold times the squared reference (in particular
    any negative radicand) are recomputed exactly from the matrix.
    """
    n = work.shape[1]
    if not 0 <= n_s < n_s1 <= n:
        raise ValueError(f"bad downdate range [{n_s}, {n_s1}) for n={n}")
    pn.u[:n_s1] = 0.0
    pn.u_ref[:n_s1] = 0.0
    if n_s1 == n:
        return
    R = work[n_s:n_s1, n_s1:]
    drop = np.einsum("ij,ij->j", R, R)
    sq = pn.u[n_s1:] ** 2 - drop
    u_new = np.sqrt(np.maximum(sq, 0.0))
    needs = sq <= pn.recompute_threshold * pn.u_ref[n_s1:] ** 2
    if np.any(needs):
        local = np.flatnonzero(needs)
        fresh = column_norms(work[n_s1:, local + n_s1])
        u_new[local] = fresh
        pn.u_ref[local + n_s1] = fresh
    pn.u[n_s1:] = u_new


def check_stop(
    pn: PartialNorms,
    initial_max_norm: float,
    n: int,
    n_s: int,
    stop: StopCriterion,
) -> bool:
    """True when sqrt(n - n_s) * max partial norm <= eps_1 * initial max norm."""
    eps1 = stop.eps1(n)
    if eps1 is None:
        return False
    if n_s >= n:
        raise ValueError("stop test requires unprocessed columns")
    lhs = math.sqrt(n - n_s) * float(pn.u[n_s:].max())
    return lhs <= eps1 * initial_max_norm


def _posthoc_rank(result_diag: np.ndarray, n: int, initial_max_norm: float) -> int:
    thresh = EPS * n * initial_max_norm
    return int(np.count_nonzero(np.abs(result_diag) > thresh))


def _record_norm_check(trace: list, pn: PartialNorms, work, n_s1: int, scale: float):
    if n_s1 >= work.shape[1]:
        return
    direct = column_norms(work[n_s1:, n_s1:])
    denom = np.maximum(np.maximum(direct, EPS * scale), np.finfo(np.float64).tiny)
    trace.append(float(np.max(np.abs(pn.u[n_s1:] - direct) / denom)))


def _scalar_step(work, pn, perm, coeffs, s, counters) -> None:
    """One greedy pivot step: argmax norm to the front, reflect, pack."""
    m, n = work.shape
    j = s + int(np.argmax(pn.u[s:]))
    if j != s:
        swap_columns(work, s, j)
        pn.swap(s, j)
        perm.swap(s, j)
    refl, beta = make_reflector(work[s:, s])
    coeffs[s] = refl.coeff
    if s + 1 < n:
        apply_reflector_left(refl, work[s:, s + 1 :])
        counters.rank1_flops += 4.0 * (m - s) * (n - s - 1)
        counters.total_flops += 4.0 * (m - s) * (n - s - 1)
    work[s, s] = beta
    work[s + 1 :, s] = refl.v[1:]
    counters.total_flops += 4.0 * (m - s) + (n - s)  # reflector + pivot scan


def qrp(
    A,
    stop: StopCriterion = StopCriterion(),
    trace_norms: bool = False,
) -> RRQRResult:
    """QR with greedy column pivoting.

    The pivot at step s is the trailing column of maximum partial norm (ties to
    the smallest index), which makes |r_11| >= |r_22| >= ... on the diagonal.
    With an active stop rule the factorization halts as soon as the whole
    trailing block is negligible and reports rank = steps done; with
    StopRule.NONE it runs to completion and counts the diagonal entries above
    eps * n * max initial column norm.
    """
    work = dense(A)
    m, n = work.shape
    perm = Permutation(n)
    pn = PartialNorms.from_matrix(work)
    a_max0 = float(pn.u.max(initial=0.0))
    kmax = min(m, n)
    coeffs = np.zeros(kmax)
    counters = WorkCounters(total_flops=2.0 * m * n)
    step_log: list[StepRecord] = []
    trace: list[float] = []
    rank = None
    steps = 0
    for s in range(kmax):
        if check_stop(pn, a_max0, n, s, stop):
            rank = s
            break
        _scalar_step(work, pn, perm, coeffs, s, counters)
        downdate_norms(pn, work, s, s + 1)
        counters.total_flops += 4.0 * (n - s - 1)
        if trace_norms:
            _record_norm_check(trace, pn, work, s + 1, a_max0)
        step_log.append(StepRecord(n_s=s, k_selected=1, k_accepted=1))
        steps = s + 1
    stopped = rank is not None
    if rank is None:
        if stop.variant is StopRule.NONE:
            rank = _posthoc_rank(work.diagonal()[:steps], n, a_max0)
        else:
            rank = steps
    return RRQRResult(
        packed=work,
        coeffs=coeffs,
        perm=perm,
        rank=rank,
        step_log=step_log,
        n_factored=steps,
        stopped_early=stopped,
        counters=counters,
        norm_trace=trace,
    )


def _move_selected_to_front(work, pn, perm, base: int, targets: list[int]) -> None:
    """Cyclic-shift the selected columns into positions base, base+1, ...

    Each move is a two-column swap; when a swap displaces a later-selected
    column its tracked position is patched up.
    """
    pos = list(targets)
    for i in range(len(pos)):
        tgt = base + i
        src = pos[i]
        if src == tgt:
            continue
        swap_columns(work, tgt, src)
        pn.swap(tgt, src)
        perm.swap(tgt, src)
        for h in range(i + 1, len(pos)):
            if pos[h] == tgt:
                pos[h] = src
                break


def _qrdm_engine(
    A,
    params: DMParams,
    stop: StopCriterion,
    break_check: bool,
    trace_norms: bool,
) -> RRQRResult:
    work = dense(A)
    m, n = work.shape
    perm = Permutation(n)
    pn = PartialNorms.from_matrix(work)
    a_max0 = float(pn.u.max(initial=0.0))
    norm_floor = n * EPS * a_max0
    kmax = min(m, n)
    coeffs = np.zeros(kmax)
    counters = WorkCounters(total_flops=2.0 * m * n)
    step_log: list[StepRecord] = []
    trace: list[float] = []
    rank = None
    n_s = 0
    while n_s < kmax:
        if check_stop(pn, a_max0, n, n_s, stop):
            rank = n_s
            break
        try:
            sel: DMSelection = dm_select(
                work[n_s:, n_s:], pn.u[n_s:], params, norm_floor=norm_floor
            )
        except NormFloorSignal:
            _scalar_step(work, pn, perm, coeffs, n_s, counters)
            downdate_norms(pn, work, n_s, n_s + 1)
            counters.total_flops += 4.0 * (n - n_s - 1)
            if trace_norms:
                _record_norm_check(trace, pn, work, n_s + 1, a_max0)
            step_log.append(
                StepRecord(n_s=n_s, k_selected=1, k_accepted=1, fell_back_to_scalar=True)
            )
            n_s += 1
            continue

        k_s = min(sel.k, kmax - n_s)
        counters.total_flops += (m - n_s) * (sel.k_max + 1) ** 2  # cosine matrix
        eps_s = params.tau * float(pn.u[n_s:].max())
        _move_selected_to_front(work, pn, perm, n_s, [n_s + r for r in sel.indices[:k_s]])

        refls: list[Reflector] = []
        broke = False
        for l in range(k_s):
            col = n_s + l
            refl, beta = make_reflector(work[col:, col])
            coeffs[col] = refl.coeff
            if col + 1 < n_s + k_s:
                apply_reflector_left(refl, work[col:, col + 1 : n_s + k_s])
                fl = 4.0 * (m - col) * (n_s + k_s - col - 1)
                counters.rank1_flops += fl
                counters.total_flops += fl
            work[col, col] = beta
            work[col + 1 :, col] = refl.v[1:]
            counters.total_flops += 4.0 * (m - col)
            refls.append(refl)
            if break_check and l + 1 < k_s:
                nxt = col + 1
                if float(column_norms(work[nxt:, nxt])[0]) < eps_s:
                    broke = True
                    break

        l_acc = len(refls)
        if n_s + k_s < n:
            block = accumulate_wy(refls)
            counters.total_flops += 2.0 * (m - n_s) * l_acc**2  # aggregation
            apply_block_left(block, work[n_s:, n_s + k_s :])
            fl = (4.0 * (m - n_s) * l_acc + 2.0 * l_acc**2) * (n - n_s - k_s)
            counters.blocked_flops += fl
            counters.total_flops += fl
        n_s1 = n_s + l_acc
        downdate_norms(pn, work, n_s, n_s1)
        counters.total_flops += 2.0 * l_acc * (n - n_s1) if n_s1 < n else 0.0
        if trace_norms:
            _record_norm_check(trace, pn, work, n_s1, a_max0)
        step_log.append(
            StepRecord(
                n_s=n_s,
                k_selected=k_s,
                k_accepted=l_acc,
                broke_early=broke,
                eps_s=eps_s,
                gamma=sel.gamma,
            )
        )
        n_s = n_s1

    stopped = rank is not None
    n_factored = n_s if stopped else min(n_s, kmax)
    if rank is None:
        if stop.variant is StopRule.NONE:
            rank = _posthoc_rank(work.diagonal()[:n_factored], n, a_max0)
        else:
            rank = n_factored
    return RRQRResult(
        packed=work,
        coeffs=coeffs,
        perm=perm,
        rank=rank,
        step_log=step_log,
        n_factored=n_factored,
        stopped_early=stopped,
        counters=counters,
        norm_trace=trace,
    )


def qrdm(
    A,
    params: DMParams = DMParams(),
    stop: StopCriterion = StopCriterion(),
    trace_norms: bool = False,
) -> RRQRResult:
    """Blocked QR with deviation-maximization pivoting.

    Every outer step selects a block of long, mutually well-separated trailing
    columns, moves them to the front, triangularizes them with scalar
    reflectors, then hits the remaining trailing columns with one aggregated
    block update.  When the trailing norms sink to round-off the step falls
    back to scalar pivoting for one column.
    """
    return _qrdm_engine(A, params, stop, break_check=False, trace_norms=trace_norms)


def qrdm2(
    A,
    params: DMParams = DMParams(),
    stop: StopCriterion = StopCriterion(),
    trace_norms: bool = False,
) -> RRQRResult:
    """``qrdm`` plus the within-block break check.

    After each reflector the residual norm of the next selected column is
    tested against eps_s = tau * (max trailing norm at block start); a failure
    rejects the rest of the block, whose columns stay in the trailing matrix
    for re-pivoting.  This keeps loose (tau, delta) choices safe.
    """
    return _qrdm_engine(A, params, stop, break_check=True, trace_norms=trace_norms)


def reconstruct(result: RRQRResult) -> tuple[np.ndarray, np.ndarray]:
    """Explicit (Q, R) with Q m-by-m orthogonal such that Q @ R == A @ Pi.

    R keeps the raw trailing block of an early-stopped factorization, so the
    identity holds regardless of where the driver halted.
    """
    packed = result.packed
    m, n = packed.shape
    p = result.n_factored
    Q = np.eye(m, order="F")
    for s in range(p - 1, -1, -1):
        v = np.empty(m - s)
        v[0] = 1.0
        v[1:] = packed[s + 1 :, s]
        tau = result.coeffs[s]
        if tau != 0.0:
            w = tau * (v @ Q[s:, :])
            Q[s:, :] -= np.outer(v, w)
    R = np.asfortranarray(packed.copy())
    for j in range(min(p, n)):
        R[j + 1 :, j] = 0.0
    return Q, R
