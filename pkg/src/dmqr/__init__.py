"""Rank-revealing QR with deviation-maximization block pivoting.

Public surface: the three factorization drivers (``qrp``, ``qrdm``,
``qrdm2``), the column selector (``dm_select``), the singular-value oracle
(``jacobi_svd``) with its bound verifiers, and the batch harness.
"""

from .dm import DMParams, DMSelection, NormFloorSignal, candidate_set, cosine_matrix, dm_select, lemma1_certificate
from .harness import (
    ComparisonRow,
    RunConfig,
    compare_run,
    fixture_suite,
    grid_sweep,
    kahan_matrix,
    random_rank_deficient,
    rows_to_csv,
)
from .householder import Reflector, ReflectorBlock, accumulate_wy, apply_block_left, make_reflector
from .matrix import Permutation, apply_column_swaps, column_norms, dense, gemm
from .mmio import MatrixMarketError, read_matrix_market, write_matrix_market
from .rrqr import (
    EPS,
    PartialNorms,
    RRQRResult,
    StepRecord,
    StopCriterion,
    StopRule,
    check_stop,
    downdate_norms,
    qrdm,
    qrdm2,
    qrp,
    reconstruct,
)
from .svd import (
    BoundReport,
    JacobiConvergenceError,
    SpectrumReport,
    jacobi_svd,
    norm_bounds_check,
    qrdm_theorem_check,
    row_inverse_bound_check,
    scaled_sdd_check,
    sdd_gap,
)

__version__ = "0.1.0"

__all__ = [
    "DMParams", "DMSelection", "NormFloorSignal", "candidate_set", "cosine_matrix",
    "dm_select", "lemma1_certificate",
    "Reflector", "ReflectorBlock", "accumulate_wy", "apply_block_left", "make_reflector",
    "Permutation", "apply_column_swaps", "column_norms", "dense", "gemm",
    "MatrixMarketError", "read_matrix_market", "write_matrix_market",
    "EPS", "PartialNorms", "RRQRResult", "StepRecord", "StopCriterion", "StopRule",
    "check_stop", "downdate_norms", "qrp", "qrdm", "qrdm2", "reconstruct",
    "BoundReport", "JacobiConvergenceError", "SpectrumReport", "jacobi_svd",
    "norm_bounds_check", "qrdm_theorem_check", "row_inverse_bound_check",
    "scaled_sdd_check", "sdd_gap",
    "ComparisonRow", "RunConfig", "compare_run", "fixture_suite", "grid_sweep",
    "kahan_matrix", "random_rank_deficient", "rows_to_csv",
]
