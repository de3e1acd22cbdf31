"""Symmetric-matrix primitives: spectral calculus, orderings, norms."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adareg.errors import DomainError, ValidationError
from adareg.linalg import (
    SymmetricMatrix,
    apply_scalar_fn,
    clamp_spectrum,
    eig_sym,
    frobenius_inner,
    mahalanobis_norm,
    matrix_power_psd,
    min_eigenvalue,
    psd_geq,
    rank_one_update,
    trace_power,
)
from conftest import random_pd, random_psd


class TestSymmetricMatrix:
    def test_rejects_non_square(self):
        with pytest.raises(ValidationError, match="square"):
            SymmetricMatrix(np.zeros((2, 3)))

    def test_rejects_non_finite(self):
        with pytest.raises(ValidationError, match="finite"):
            SymmetricMatrix([[1.0, 0.0], [0.0, np.nan]])

    def test_rejects_genuine_asymmetry(self):
        with pytest.raises(ValidationError, match="not symmetric"):
            SymmetricMatrix([[1.0, 0.5], [0.0, 1.0]])

    def test_symmetrizes_roundoff(self):
        a = np.array([[1.0, 0.5 + 1e-16], [0.5, 1.0]])
        m = SymmetricMatrix(a)
        np.testing.assert_array_equal(m.mat, m.mat.T)

    def test_entries_are_read_only(self):
        m = SymmetricMatrix.identity(2)
        with pytest.raises(ValueError):
            m.mat[0, 0] = 5.0

    def test_constructors(self):
        np.testing.assert_array_equal(SymmetricMatrix.identity(3).mat, np.eye(3))
        np.testing.assert_array_equal(SymmetricMatrix.zero(2).mat, np.zeros((2, 2)))
        np.testing.assert_array_equal(
            SymmetricMatrix.from_diagonal([4.0, 9.0]).mat, np.diag([4.0, 9.0])
        )
        assert SymmetricMatrix.from_diagonal([4.0, 9.0]).trace() == 13.0


class TestEigSym:
    def test_identity(self):
        dec = eig_sym(SymmetricMatrix.identity(3))
        np.testing.assert_allclose(dec.eigenvalues, [1.0, 1.0, 1.0])
        np.testing.assert_allclose(
            dec.eigenvectors @ dec.eigenvectors.T, np.eye(3), atol=1e-12
        )

    def test_diagonal_sorted_descending(self):
        dec = eig_sym(SymmetricMatrix.from_diagonal([4.0, 9.0]))
        np.testing.assert_allclose(dec.eigenvalues, [9.0, 4.0])

    def test_reconstruction(self, rng):
        a = random_pd(rng, 5)
        dec = eig_sym(a)
        np.testing.assert_allclose(dec.reconstruct().mat, a.mat, atol=1e-9)


class TestApplyScalarFn:
    def test_sqrt_of_diagonal(self):
        a = SymmetricMatrix.from_diagonal([4.0, 9.0])
        np.testing.assert_allclose(
            apply_scalar_fn(a, math.sqrt).mat, np.diag([2.0, 3.0]), atol=1e-12
        )

    def test_identity_function(self, rng):
        a = random_pd(rng, 4)
        np.testing.assert_allclose(apply_scalar_fn(a, lambda x: x).mat, a.mat, atol=1e-10)

    def test_sqrt_then_square_recovers(self, rng):
        a = random_psd(rng, 5)
        root = apply_scalar_fn(a, math.sqrt)
        np.testing.assert_allclose((root.mat @ root.mat), a.mat, atol=1e-8)

    def test_roundoff_negative_is_clamped(self):
        # eigenvalues {1, -1e-15}: inside the clamp band, sqrt must not raise
        u = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)
        a = SymmetricMatrix(u @ np.diag([1.0, -1e-15]) @ u.T)
        root = apply_scalar_fn(a, math.sqrt)
        assert min_eigenvalue(root) >= 0.0

    def test_genuinely_negative_eigenvalue_raises(self):
        a = SymmetricMatrix.from_diagonal([1.0, -0.5])
        with pytest.raises(DomainError, match="eigenvalue"):
            apply_scalar_fn(a, math.sqrt)

    def test_non_finite_output_raises(self):
        a = SymmetricMatrix.from_diagonal([1.0, 0.0])
        with pytest.raises(DomainError, match="eigenvalue"):
            apply_scalar_fn(a, lambda x: 1.0 / x)


def test_clamp_spectrum_band():
    lam = np.array([2.0, -1e-15, -1e-6])
    out = clamp_spectrum(lam)
    assert out[1] == 0.0
    assert out[2] == -1e-6  # outside the band, kept


class TestInnerProductsAndNorms:
    def test_identity_inner_is_trace(self, rng):
        a = random_pd(rng, 4)
        assert frobenius_inner(SymmetricMatrix.identity(4), a) == pytest.approx(a.trace())

    def test_diagonal_inner(self):
        a = SymmetricMatrix.from_diagonal([1.0, 2.0])
        b = SymmetricMatrix.from_diagonal([3.0, 4.0])
        assert frobenius_inner(a, b) == pytest.approx(11.0)

    def test_rank_one_inner_matches_mahalanobis(self, rng):
        g = rng.standard_normal(4)
        h = random_pd(rng, 4)
        gg = SymmetricMatrix(np.outer(g, g))
        assert frobenius_inner(gg, h) == pytest.approx(
            mahalanobis_norm(g, h) ** 2, abs=1e-10
        )

    def test_mahalanobis_direct(self):
        h = SymmetricMatrix.from_diagonal([4.0, 9.0])
        assert mahalanobis_norm(np.array([1.0, 1.0]), h) == pytest.approx(math.sqrt(13.0))
        assert mahalanobis_norm(np.zeros(2), h) == 0.0

    def test_mahalanobis_identity_is_euclidean(self, rng):
        x = rng.standard_normal(5)
        assert mahalanobis_norm(x, SymmetricMatrix.identity(5)) == pytest.approx(
            np.linalg.norm(x)
        )

    def test_mahalanobis_indefinite_raises(self):
        h = SymmetricMatrix.from_diagonal([1.0, -1.0])
        with pytest.raises(DomainError, match="indefinite"):
            mahalanobis_norm(np.array([0.0, 1.0]), h)

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError, match="mismatch"):
            frobenius_inner(SymmetricMatrix.identity(2), SymmetricMatrix.identity(3))


class TestRankOneUpdate:
    def test_from_zero(self):
        g = np.array([1.0, 2.0])
        out = rank_one_update(SymmetricMatrix.zero(2), g)
        np.testing.assert_array_equal(out.mat, [[1.0, 2.0], [2.0, 4.0]])

    def test_zero_gradient_is_noop(self, rng):
        a = random_pd(rng, 3)
        np.testing.assert_array_equal(rank_one_update(a, np.zeros(3)).mat, a.mat)

    def test_repeated_updates_equal_batch(self, rng):
        g0 = random_pd(rng, 4)
        grads = rng.standard_normal((6, 4))
        acc = g0
        for g in grads:
            acc = rank_one_update(acc, g)
        batch = g0.mat + sum(np.outer(g, g) for g in grads)
        np.testing.assert_allclose(acc.mat, batch, atol=1e-12)


class TestLoewnerOrder:
    def test_reflexive_and_scaled_identity(self):
        i2 = SymmetricMatrix.identity(2)
        assert psd_geq(i2, i2)
        assert psd_geq(SymmetricMatrix.identity(2, scale=2.0), i2)
        assert not psd_geq(i2, SymmetricMatrix.identity(2, scale=2.0))

    def test_squaring_breaks_the_order(self):
        # A - B is psd, but A^2 - B^2 has determinant -1, hence a negative
        # eigenvalue: squaring is not order preserving.
        a = SymmetricMatrix([[2.0, 1.0], [1.0, 1.0]])
        b = SymmetricMatrix([[1.0, 0.0], [0.0, 0.0]])
        assert psd_geq(a, b)
        a2 = matrix_power_psd(a, 2.0)
        b2 = matrix_power_psd(b, 2.0)
        assert not psd_geq(a2, b2)
        assert np.linalg.det(a2.mat - b2.mat) == pytest.approx(-1.0, abs=1e-9)

    @settings(max_examples=60, deadline=None)
    @given(
        seed=st.integers(min_value=0, max_value=2**32 - 1),
        dim=st.integers(min_value=2, max_value=6),
        alpha=st.sampled_from([0.25, 0.5, 1.0]),
    )
    def test_fractional_powers_preserve_the_order(self, seed, dim, alpha):
        rng = np.random.default_rng(seed)
        b = random_psd(rng, dim)
        a = SymmetricMatrix(b.mat + random_psd(rng, dim).mat)
        assert psd_geq(matrix_power_psd(a, alpha), matrix_power_psd(b, alpha), tol=1e-8)


class TestMatrixPower:
    def test_zero_to_a_power_is_zero(self):
        out = matrix_power_psd(SymmetricMatrix.zero(3), 0.5)
        np.testing.assert_array_equal(out.mat, np.zeros((3, 3)))

    def test_power_matches_eigenvalue_powers(self, rng):
        a = random_pd(rng, 4)
        lam = np.linalg.eigvalsh(a.mat)
        out = matrix_power_psd(a, 0.5)
        np.testing.assert_allclose(
            np.linalg.eigvalsh(out.mat), np.sqrt(lam), atol=1e-10
        )

    def test_trace_power_consistent(self, rng):
        a = random_pd(rng, 5)
        assert trace_power(a, 0.5) == pytest.approx(matrix_power_psd(a, 0.5).trace())

    def test_nonpositive_exponent_raises(self):
        with pytest.raises(DomainError, match="positive"):
            matrix_power_psd(SymmetricMatrix.identity(2), 0.0)

    def test_indefinite_input_raises(self):
        with pytest.raises(DomainError, match="positive-semidefinite"):
            matrix_power_psd(SymmetricMatrix.from_diagonal([1.0, -1.0]), 0.5)
