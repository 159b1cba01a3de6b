import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dmqr.householder import (
    accumulate_wy,
    apply_block_left,
    apply_reflector_left,
    make_reflector,
)
from dmqr.rrqr import EPS
from _utils import explicit_reflector


def _random_triangular_reflectors(rng, m, k):
    # essential lengths m, m-1, ..., m-k+1
    return [make_reflector(rng.standard_normal(m - j))[0] for j in range(k)]


class TestMakeReflector:
    def test_unit_vector_sign_convention(self):
        refl, beta = make_reflector(np.array([1.0, 0.0, 0.0]))
        assert beta == -1.0
        H = explicit_reflector(refl)
        assert np.allclose(H @ [1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], atol=1e-15)

    def test_3_4_norm(self):
        refl, beta = make_reflector(np.array([3.0, 4.0]))
        assert abs(beta) == pytest.approx(5.0, rel=1e-15)
        assert beta == -5.0  # opposite sign of x[0]

    def test_zero_vector_identity(self):
        refl, beta = make_reflector(np.zeros(4))
        assert beta == 0.0 and refl.coeff == 0.0
        C = np.asfortranarray(np.arange(8.0).reshape(4, 2))
        D = C.copy()
        apply_reflector_left(refl, C)
        assert np.array_equal(C, D)

    def test_random_annihilation(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal(9)
        refl, beta = make_reflector(x)
        y = explicit_reflector(refl) @ x
        assert abs(y[0] - beta) <= 1e-14 * np.linalg.norm(x)
        assert np.abs(y[1:]).max() <= 1e-14 * np.linalg.norm(x)

    def test_coeff_range(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            refl, _ = make_reflector(rng.standard_normal(rng.integers(1, 12)))
            assert 0.0 <= refl.coeff <= 2.0 + 4 * EPS

    def test_orthogonality(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal(11)
        refl, _ = make_reflector(x)
        H = explicit_reflector(refl)
        assert np.abs(H.T @ H - np.eye(11)).max() <= 16 * EPS * 11


class TestAccumulateWY:
    def test_single_reflector_degenerate(self):
        refl, _ = make_reflector(np.array([2.0, 1.0, -1.0]))
        block = accumulate_wy([refl])
        assert np.array_equal(block.Y[:, 0], refl.v)
        assert block.W.shape == (1, 1) and block.W[0, 0] == refl.coeff

    def test_empty_list_rejected(self):
        with pytest.raises(ValueError):
            accumulate_wy([])

    def test_wrong_lengths_rejected(self):
        r1, _ = make_reflector(np.ones(5))
        r2, _ = make_reflector(np.ones(5))
        with pytest.raises(ValueError):
            accumulate_wy([r1, r2])

    def test_two_reflectors_vs_product(self):
        rng = np.random.default_rng(7)
        r1, _ = make_reflector(rng.standard_normal(6))
        r2, _ = make_reflector(rng.standard_normal(5))
        block = accumulate_wy([r1, r2])
        QB = np.eye(6) - block.Y @ block.W @ block.Y.T
        H1 = explicit_reflector(r1, 6)
        H2 = explicit_reflector(r2, 6)
        assert np.abs(QB - H1 @ H2).max() <= 1e-14

    def test_k8_block_vs_product(self):
        rng = np.random.default_rng(8)
        m, k = 32, 8
        refls = _random_triangular_reflectors(rng, m, k)
        block = accumulate_wy(refls)
        QB = np.eye(m) - block.Y @ block.W @ block.Y.T
        P = np.eye(m)
        for j, r in enumerate(refls):
            P = P @ explicit_reflector(r, m)
        assert np.abs(QB - P).max() <= 1e-12

    def test_block_orthogonality(self):
        rng = np.random.default_rng(9)
        m, k = 24, 6
        block = accumulate_wy(_random_triangular_reflectors(rng, m, k))
        QB = np.eye(m) - block.Y @ block.W @ block.Y.T
        assert np.abs(QB.T @ QB - np.eye(m)).max() <= 64 * EPS * m * k


class TestApplyBlockLeft:
    def test_identity_block_leaves_input(self):
        refls = [make_reflector(np.zeros(5 - j))[0] for j in range(3)]
        block = accumulate_wy(refls)
        C = np.asfortranarray(np.arange(10.0).reshape(5, 2))
        D = C.copy()
        apply_block_left(block, C)
        assert np.array_equal(C, D)

    def test_k1_equals_scalar_application(self):
        rng = np.random.default_rng(10)
        refl, _ = make_reflector(rng.standard_normal(7))
        C1 = np.asfortranarray(rng.standard_normal((7, 4)))
        C2 = C1.copy()
        apply_block_left(accumulate_wy([refl]), C1)
        apply_reflector_left(refl, C2)
        assert np.abs(C1 - C2).max() <= 1e-14 * np.abs(C2).max()

    def test_matches_explicit_orthogonal_multiply(self):
        rng = np.random.default_rng(11)
        m, k = 16, 5
        refls = _random_triangular_reflectors(rng, m, k)
        block = accumulate_wy(refls)
        C = np.asfortranarray(rng.standard_normal((m, 9)))
        want = (np.eye(m) - block.Y @ block.W.T @ block.Y.T) @ C
        apply_block_left(block, C)
        assert np.abs(C - want).max() <= 1e-12

    def test_dimension_mismatch(self):
        refl, _ = make_reflector(np.ones(4))
        block = accumulate_wy([refl])
        with pytest.raises(ValueError):
            apply_block_left(block, np.ones((5, 2)))

    def test_norm_preservation(self):
        rng = np.random.default_rng(12)
        m, k = 20, 4
        block = accumulate_wy(_random_triangular_reflectors(rng, m, k))
        C = np.asfortranarray(rng.standard_normal((m, 6)))
        before = np.linalg.norm(C)
        apply_block_left(block, C)
        assert np.linalg.norm(C) == pytest.approx(before, rel=1e-13)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(2, 16), st.integers(1, 6))
def test_composition_scalar_vs_block(seed, m, k):
    """Applying reflectors one by one equals the accumulated block update."""
    k = min(k, m)
    rng = np.random.default_rng(seed)
    refls = _random_triangular_reflectors(rng, m, k)
    C1 = np.asfortranarray(rng.standard_normal((m, 5)))
    C2 = C1.copy()
    # H_k ... H_1 C, scalar path (reflector j acts on rows j..m)
    for j, r in enumerate(refls):
        apply_reflector_left(r, C1[j:, :])
    apply_block_left(accumulate_wy(refls), C2)
    assert np.abs(C1 - C2).max() <= 1e-12 * max(1.0, np.abs(C1).max())


def test_composition_64x64():
    rng = np.random.default_rng(13)
    m, k = 64, 12
    refls = _random_triangular_reflectors(rng, m, k)
    C1 = np.asfortranarray(rng.standard_normal((m, 64)))
    C2 = C1.copy()
    for j, r in enumerate(refls):
        apply_reflector_left(r, C1[j:, :])
    apply_block_left(accumulate_wy(refls), C2)
    assert np.abs(C1 - C2).max() <= 1e-12 * np.abs(C1).max()
