"""Desk-scale singular value oracle and empirical bound verifiers.

The oracle is a one-sided Jacobi iteration on columns: plane rotations
orthogonalize column pairs until every remaining rotation is negligible, after
which the column norms are the singular values.  One-sided Jacobi attains high
relative accuracy also for small singular values, which the ratio diagnostics
in the harness depend on; bidiagonalization-based methods would not.

The verifiers turn inequalities between norms, inverse rows, diagonal
dominance gaps, and pivoted-factor singular values into BoundReport records.
Comparisons allow a relative slack of 1e-12 so that ties (identity-like
inputs) cannot flip a mathematically valid bound through round-off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.linalg import solve_triangular

from .dm import DMParams
from .matrix import column_norms
from .rrqr import EPS, RRQRResult

__all__ = [
    "SpectrumReport",
    "BoundReport",
    "JacobiConvergenceError",
    "jacobi_svd",
    "norm_bounds_check",
    "row_inverse_bound_check",
    "sdd_gap",
    "scaled_sdd_check",
    "qrdm_theorem_check",
]

_REL_SLACK = 1e-12
_MAX_COLS = 512


class JacobiConvergenceError(RuntimeError):
    """Raised when the sweep cap is hit; carries the partial result."""

    def __init__(self, report: "SpectrumReport"):
        super().__init__(
            f"one-sided Jacobi did not converge in {report.convergence_sweeps} sweeps"
        )
        self.report = report


@dataclass
class SpectrumReport:
    sigmas: np.ndarray         # descending
    numerical_rank: int        # count of sigma_i > eps * n * sigma_1
    convergence_sweeps: int


@dataclass
class BoundReport:
    name: str
    lhs: float
    rhs: float
    holds: bool
    slack: float               # margin by which the bound is satisfied
    applicable: bool = True


def _leq(lhs: float, rhs: float) -> bool:
    return lhs <= rhs + _REL_SLACK * max(abs(lhs), abs(rhs))


@njit(cache=True)
def _jacobi_sweeps(X, tol, max_sweeps):  # pragma: no cover - compiled
    m, n = X.shape
    sweeps = 0
    converged = False
    while sweeps < max_sweeps and not converged:
        sweeps += 1
        max_sine = 0.0
        for i in range(n - 1):
            for j in range(i + 1, n):
                a = 0.0
                b = 0.0
                g = 0.0
                for r in range(m):
                    xi = X[r, i]
                    xj = X[r, j]
                    a += xi * xi
                    b += xj * xj
                    g += xi * xj
                if a == 0.0 or b == 0.0 or g == 0.0:
                    continue
                if g * g <= (tol * tol) * a * b:
                    continue
                zeta = (b - a) / (2.0 * g)
                if zeta >= 0.0:
                    t = 1.0 / (zeta + math.sqrt(1.0 + zeta * zeta))
                else:
                    t = -1.0 / (-zeta + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                if abs(s) > max_sine:
                    max_sine = abs(s)
                for r in range(m):
                    xi = X[r, i]
                    xj = X[r, j]
                    X[r, i] = c * xi - s * xj
                    X[r, j] = s * xi + c * xj
        if max_sine <= tol:
            converged = True
    return sweeps, converged


def jacobi_svd(A, tol: float = 1e-15, max_sweeps: int = 30) -> SpectrumReport:
    """Singular values of A by one-sided Jacobi rotations on columns.

    Wide matrices are transposed internally (the spectrum is unchanged).  The
    working column count is capped at 512; this is a verification oracle, not
    a production SVD.  Sweeps continue until every applied rotation has sine
    at most ``tol`` (pairs whose normalized inner product is already below
    ``tol`` are skipped) or ``max_sweeps`` is hit, which raises
    JacobiConvergenceError carrying the partial spectrum.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError("oracle input must be 2-d")
    n_cols = A.shape[1]
    work = A.T if A.shape[0] < A.shape[1] else A
    if work.shape[1] > _MAX_COLS:
        raise ValueError(
            f"oracle guard: {work.shape[1]} columns exceeds the desk-scale cap {_MAX_COLS}"
        )
    X = np.array(work, dtype=np.float64, order="F")
    sweeps, ok = _jacobi_sweeps(X, tol, max_sweeps)
    sigmas = np.sort(column_norms(X))[::-1].copy()
    rank = int(np.count_nonzero(sigmas > EPS * n_cols * (sigmas[0] if sigmas.size else 0.0)))
    report = SpectrumReport(sigmas, rank, sweeps)
    if not ok:
        raise JacobiConvergenceError(report)
    return report


def norm_bounds_check(A) -> list[BoundReport]:
    """Bracket the spectral norm by column norms and by the max entry.

    Checks max_i ||a_i|| <= ||A|| <= sqrt(n) max_i ||a_i|| and
    ||A||_max <= ||A|| <= sqrt(mn) ||A||_max with ||A|| from the oracle.
    """
    A = np.asarray(A, dtype=np.float64)
    m, n = A.shape
    sigma1 = float(jacobi_svd(A).sigmas[0])
    max_col = float(column_norms(A).max(initial=0.0))
    max_abs = float(np.abs(A).max(initial=0.0))
    pairs = [
        ("max_col_norm<=sigma1", max_col, sigma1),
        ("sigma1<=sqrt(n)*max_col_norm", sigma1, math.sqrt(n) * max_col),
        ("max_abs<=sigma1", max_abs, sigma1),
        ("sigma1<=sqrt(mn)*max_abs", sigma1, math.sqrt(m * n) * max_abs),
    ]
    return [
        BoundReport(name, lhs, rhs, _leq(lhs, rhs), rhs - lhs) for name, lhs, rhs in pairs
    ]


def _plain_qr_inverse(A: np.ndarray) -> np.ndarray:
    """Inverse via an internal unpivoted Householder QR and triangular solves."""
    from .householder import apply_reflector_left, make_reflector

    n = A.shape[0]
    work = np.array(A, dtype=np.float64, order="F")
    refls = []
    for s in range(n):
        refl, beta = make_reflector(work[s:, s])
        if s + 1 < n:
            apply_reflector_left(refl, work[s:, s + 1 :])
        work[s, s] = beta
        work[s + 1 :, s] = 0.0
        refls.append(refl)
    qt = np.eye(n, order="F")
    for s, refl in enumerate(refls):
        apply_reflector_left(refl, qt[s:, :])
    return solve_triangular(work, qt, lower=False)


def row_inverse_bound_check(A) -> BoundReport:
    """Bracket sigma_min by the reciprocal row norms of the inverse.

    Verifies sigma_min(A) <= min_i ||b_i||^{-1} <= sqrt(n) sigma_min(A), b_i
    the rows of A^{-1}.  Near-singular input (sigma_min <= 1e-12 sigma_1)
    yields a not-applicable report.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("row-inverse bound needs a square matrix")
    n = A.shape[0]
    spectrum = jacobi_svd(A)
    sigma_min = float(spectrum.sigmas[-1])
    if sigma_min <= 1e-12 * float(spectrum.sigmas[0]):
        return BoundReport("inverse_row_bracket", sigma_min, 0.0, False, 0.0, applicable=False)
    inv = _plain_qr_inverse(A)
    min_recip = float(1.0 / column_norms(inv.T).max())
    holds = _leq(sigma_min, min_recip) and _leq(min_recip, math.sqrt(n) * sigma_min)
    return BoundReport(
        "inverse_row_bracket",
        sigma_min,
        min_recip,
        holds,
        math.sqrt(n) * sigma_min - min_recip,
    )


def sdd_gap(A, by: str = "rows") -> float | None:
    """Diagonal dominance gap min_i (|a_ii| - sum_{j != i} |a_ij|).

    Returns the gap when positive, None when the matrix is not strictly
    diagonally dominant in the requested orientation.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("dominance gap needs a square matrix")
    if by not in ("rows", "cols"):
        raise ValueError(f"by must be 'rows' or 'cols', got {by!r}")
    M = np.abs(A if by == "rows" else A.T)
    gap = float(np.min(2.0 * M.diagonal() - M.sum(axis=1)))
    return gap if gap > 0.0 else None


def scaled_sdd_check(A, d, tau: float) -> BoundReport:
    """Dominance survives two-sided scaling: gamma > 1 - tau^2 implies DAD SDD.

    A must be strictly diagonally dominant with nonzero diagonal; d must have
    no zero entry and satisfy |d_i| >= tau * max|d|.  Only the implication is
    asserted, never its converse.
    """
    A = np.asarray(A, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    if np.any(d == 0.0):
        raise ValueError("scaling vector has a zero entry")
    if np.any(np.abs(d) < tau * np.abs(d).max()):
        raise ValueError("scaling vector violates |d_i| >= tau * max|d|")
    dg = np.abs(A.diagonal())
    if np.any(dg == 0.0):
        raise ValueError("unit-diagonal normalization needs a nonzero diagonal")
    ratios = np.abs(A) / dg[:, None]
    gamma = float(np.min(1.0 - (ratios.sum(axis=1) - 1.0)))
    dad = A * d[:, None] * d[None, :]
    is_sdd = sdd_gap(dad) is not None
    hypothesis = gamma > 1.0 - tau * tau
    holds = (not hypothesis) or is_sdd
    return BoundReport(
        "scaled_sdd_implication", gamma, 1.0 - tau * tau, holds, gamma - (1.0 - tau * tau)
    )


def _triu_prefix(packed: np.ndarray, k: int) -> np.ndarray:
    return np.triu(packed[:k, :k])


def qrdm_theorem_check(A, result: RRQRResult, params: DMParams) -> list[BoundReport]:
    """Per-step worst-case floors for the pivoted factorization.

    For every outer step two bounds are evaluated against the oracle:

    * block factor floor: sigma_min(T) >= sqrt(gamma + tau^2 - 1) /
      sqrt(n - n_{s+1} + 1) * sigma_{n_{s+1}}(A), with T the triangular factor
      of the selected block;
    * recursion floor: sigma_min(R11 at n_{s+1}) >= sigma_{n_{s+1}}(A) *
      (sigma_min(R11 at n_s) / sigma_1(A)) / sqrt(2 (n - n_{s+1}) n_{s+1}) *
      sqrt(gamma + tau^2 - 1) / (k^2 n_s); at the first step the recursion has
      no predecessor and the block floor is the whole statement.

    Steps whose gamma fails gamma > 1 - tau^2 (and recursion checks with an
    empty trailing block) are reported as not applicable.  Scalar-pivot steps
    degenerate to k = 1, gamma = 1, where the same machinery covers the
    classical greedy-pivoting floor.
    """
    A = np.asarray(A, dtype=np.float64)
    n = A.shape[1]
    sigma = jacobi_svd(A).sigmas
    sigma1 = float(sigma[0])
    tau = params.tau
    reports: list[BoundReport] = []
    sigma_bar_prev: float | None = None
    for rec in result.step_log:
        n_s = rec.n_s
        k = rec.k_accepted
        n_s1 = n_s + k
        gamma = rec.gamma
        applicable = gamma > 1.0 - tau * tau
        margin = max(gamma + tau * tau - 1.0, 0.0)
        sigma_ns1_A = float(sigma[n_s1 - 1])

        T = _triu_prefix(result.packed[n_s:, n_s:], k)
        sig_T = float(jacobi_svd(T).sigmas[-1])
        rhs_T = math.sqrt(margin) / math.sqrt(n - n_s1 + 1) * sigma_ns1_A
        reports.append(
            BoundReport(
                f"block_floor[{n_s}]",
                sig_T,
                rhs_T,
                (not applicable) or rhs_T <= sig_T + _REL_SLACK * sig_T,
                sig_T - rhs_T,
                applicable=applicable,
            )
        )

        sigma_bar_next = float(jacobi_svd(_triu_prefix(result.packed, n_s1)).sigmas[-1])
        if n_s == 0:
            rhs_rec = rhs_T
            rec_applicable = applicable
        elif n_s1 >= n:
            rhs_rec = 0.0
            rec_applicable = False
        else:
            assert sigma_bar_prev is not None
            rhs_rec = (
                sigma_ns1_A
                * (sigma_bar_prev / sigma1)
                / math.sqrt(2.0 * (n - n_s1) * n_s1)
                * math.sqrt(margin)
                / (k * k * n_s)
            )
            rec_applicable = applicable
        reports.append(
            BoundReport(
                f"recursion_floor[{n_s}]",
                sigma_bar_next,
                rhs_rec,
                (not rec_applicable) or rhs_rec <= sigma_bar_next + _REL_SLACK * sigma_bar_next,
                sigma_bar_next - rhs_rec,
                applicable=rec_applicable,
            )
        )
        sigma_bar_prev = sigma_bar_next
    return reports
