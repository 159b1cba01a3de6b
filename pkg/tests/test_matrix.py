import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dmqr.matrix import (
    Permutation,
    apply_column_swaps,
    column_norms,
    dense,
    gemm,
    swap_columns,
)
from _utils import triple_loop_gemm, two_pass_norms


def test_dense_validates():
    A = dense([[1.0, 2.0], [3.0, 4.0]])
    assert A.flags.f_contiguous and A.dtype == np.float64
    with pytest.raises(ValueError):
        dense([1.0, 2.0])
    with pytest.raises(ValueError):
        dense([[np.nan, 0.0], [0.0, 1.0]])
    with pytest.raises(ValueError):
        dense([[np.inf, 0.0], [0.0, 1.0]])


class TestGemm:
    def test_identity_multiply(self):
        B = dense([[1.0, 2.0], [3.0, 4.0]])
        C = np.zeros((2, 2), order="F")
        gemm(1.0, np.eye(2), B, 0.0, C)
        assert np.array_equal(C, B)

    def test_alpha_zero_noop(self):
        C = dense([[5.0]])
        gemm(0.0, np.ones((1, 3)), np.ones((3, 1)), 1.0, C)
        assert C[0, 0] == 5.0

    def test_matches_triple_loop(self):
        rng = np.random.default_rng(1)
        A = rng.standard_normal((7, 5))
        B = rng.standard_normal((5, 3))
        C = np.asfortranarray(rng.standard_normal((7, 3)))
        want = triple_loop_gemm(1.7, A, B, -0.3, C)
        gemm(1.7, A, B, -0.3, C)
        assert np.abs(C - want).max() <= 1e-13 * np.abs(want).max()

    def test_random_sizes_vs_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(6):
            m, k, n = rng.integers(1, 65, size=3)
            A = rng.standard_normal((m, k))
            B = rng.standard_normal((k, n))
            C = np.asfortranarray(rng.standard_normal((m, n)))
            want = triple_loop_gemm(1.0, A, B, 1.0, C)
            gemm(1.0, A, B, 1.0, C)
            rel = np.linalg.norm(C - want) / max(np.linalg.norm(want), 1e-300)
            assert rel <= 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            gemm(1.0, np.ones((2, 3)), np.ones((2, 3)), 0.0, np.ones((2, 3)))
        with pytest.raises(ValueError):
            gemm(1.0, np.ones((2, 3)), np.ones((3, 2)), 0.0, np.ones((3, 3)))

    def test_aliasing_rejected(self):
        A = np.asfortranarray(np.eye(3))
        with pytest.raises(ValueError):
            gemm(1.0, A, np.eye(3), 0.0, A)


class TestColumnNorms:
    def test_identity(self):
        assert np.array_equal(column_norms(np.eye(3)), np.ones(3))

    def test_3_4_5(self):
        assert column_norms(np.array([[3.0], [4.0]]))[0] == 5.0

    def test_matches_two_pass_oracle(self):
        rng = np.random.default_rng(3)
        A = rng.standard_normal((20, 6)) * 10 ** rng.uniform(-3, 3, size=(1, 6))
        got = column_norms(A)
        want = two_pass_norms(A)
        assert np.all(np.abs(got - want) <= 1e-15 * want)

    def test_overflow_safe(self):
        big = np.full((4, 1), 1e300)
        assert np.isfinite(column_norms(big))[0]
        assert column_norms(big)[0] == pytest.approx(2e300, rel=1e-15)
        tiny = np.full((4, 1), 1e-300)
        assert column_norms(tiny)[0] == pytest.approx(2e-300, rel=1e-15)

    def test_zero_column(self):
        A = np.zeros((5, 2))
        A[:, 1] = 1.0
        assert list(column_norms(A)) == [0.0, pytest.approx(np.sqrt(5))]


class TestPermutation:
    def test_identity_leaves_matrix(self):
        A = dense([[1.0, 2.0], [3.0, 4.0]])
        B = A.copy()
        apply_column_swaps(A, Permutation(2))
        assert np.array_equal(A, B)

    def test_single_swap(self):
        A = dense([[1.0, 2.0], [3.0, 4.0]])
        p = Permutation(2)
        p.swap(0, 1)
        apply_column_swaps(A, p)
        assert np.array_equal(A, np.array([[2.0, 1.0], [4.0, 3.0]]))

    def test_out_of_range_swap(self):
        p = Permutation(3)
        with pytest.raises(ValueError):
            p.swap(0, 3)

    def test_from_forward_rejects_non_bijection(self):
        with pytest.raises(ValueError):
            Permutation.from_forward([0, 0, 2])

    @settings(max_examples=50, deadline=None)
    @given(st.permutations(list(range(7))))
    def test_replay_reproduces_forward(self, fwd):
        p = Permutation.from_forward(fwd)
        assert np.array_equal(p.replay(), p.forward)
        assert np.array_equal(p.forward, np.array(fwd))

    @settings(max_examples=30, deadline=None)
    @given(st.permutations(list(range(6))), st.integers(0, 2**31 - 1))
    def test_apply_then_inverse_bit_exact(self, fwd, seed):
        rng = np.random.default_rng(seed)
        A = np.asfortranarray(rng.standard_normal((4, 6)))
        B = A.copy()
        p = Permutation.from_forward(fwd)
        apply_column_swaps(A, p)
        # columns are moved, never recomputed: norms are permuted bit-exactly
        assert np.array_equal(
            column_norms(A), column_norms(B)[p.forward]
        )
        inv = Permutation.from_forward(p.inverse())
        apply_column_swaps(A, inv)
        assert np.array_equal(A, B)

    def test_swap_columns_scratch(self):
        A = dense([[1.0, 2.0, 3.0]])
        swap_columns(A, 0, 2)
        assert list(A[0]) == [3.0, 2.0, 1.0]
