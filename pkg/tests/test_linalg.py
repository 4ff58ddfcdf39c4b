"""Dense kernel wrappers: factorizations, eigensolves, orthonormalization."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from morkit import linalg


def _jacobi_eigenvalues(a, sweeps=100, tol=1e-13):
    """Independent symmetric eigen-oracle: classical Jacobi rotations."""
    a = a.copy()
    n = a.shape[0]
    for _ in range(sweeps):
        off = np.abs(a - np.diag(np.diag(a))).max()
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) < 1e-300:
                    continue
                theta = 0.5 * np.arctan2(2.0 * a[p, q], a[q, q] - a[p, p])
                c, s = np.cos(theta), np.sin(theta)
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
    return np.sort(np.diag(a))[::-1]


class TestSvd:
    def test_reconstruction(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((8, 5))
        res = linalg.svd(a)
        rec = res.left_vectors @ np.diag(res.singular_values) @ res.right_vectors.T
        assert np.allclose(rec, a, atol=1e-12)

    def test_singular_values_descending_nonnegative(self):
        rng = np.random.default_rng(4)
        s = linalg.svd(rng.standard_normal((6, 9))).singular_values
        assert np.all(s >= 0.0)
        assert np.all(np.diff(s) <= 1e-14)

    def test_orthonormal_factors(self):
        rng = np.random.default_rng(5)
        res = linalg.svd(rng.standard_normal((7, 4)))
        assert np.allclose(res.left_vectors.T @ res.left_vectors, np.eye(4),
                           atol=1e-12)
        assert np.allclose(res.right_vectors.T @ res.right_vectors, np.eye(4),
                           atol=1e-12)

    def test_singular_values_match_jacobi_oracle(self):
        # sigma^2 are the eigenvalues of A^T A; compare with Jacobi rotations
        rng = np.random.default_rng(6)
        a = rng.standard_normal((9, 4))
        sigma = linalg.svd(a).singular_values
        lam = _jacobi_eigenvalues(a.T @ a)
        assert np.allclose(sigma ** 2, np.clip(lam, 0.0, None), atol=1e-10)

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            linalg.svd(np.array([[1.0, np.nan], [0.0, 1.0]]))

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            linalg.svd(np.zeros((0, 3)))


class TestSymEig:
    def test_matches_jacobi_oracle(self):
        rng = np.random.default_rng(7)
        a = rng.standard_normal((6, 6))
        a = a + a.T
        lam, vec = linalg.sym_eig(a)
        assert np.allclose(lam, _jacobi_eigenvalues(a), atol=1e-9)
        assert np.allclose(a @ vec, vec * lam, atol=1e-10)

    def test_descending_order(self):
        rng = np.random.default_rng(8)
        a = rng.standard_normal((5, 5))
        lam, _ = linalg.sym_eig(a + a.T)
        assert np.all(np.diff(lam) <= 1e-12)

    def test_rejects_asymmetric(self):
        a = np.array([[1.0, 2.0], [0.0, 1.0]])
        with pytest.raises(ValueError):
            linalg.sym_eig(a)

    @given(arrays(np.float64, (4, 4),
                  elements=st.floats(-10, 10, allow_nan=False)))
    @settings(max_examples=50, deadline=None)
    def test_trace_equals_eigenvalue_sum(self, a):
        sym = a + a.T
        lam, _ = linalg.sym_eig(sym)
        assert np.isclose(lam.sum(), np.trace(sym), atol=1e-9 * (1 + abs(np.trace(sym))))


class TestSolve:
    def test_known_system(self):
        a = np.array([[2.0, 1.0], [1.0, 3.0]])
        x = linalg.solve(a, np.array([3.0, 4.0]))
        assert np.allclose(a @ x, [3.0, 4.0], atol=1e-14)

    def test_singular_raises(self):
        a = np.array([[1.0, 2.0], [2.0, 4.0]])
        with pytest.raises(linalg.SingularMatrixError):
            linalg.solve(a, np.array([1.0, 1.0]))

    @given(st.integers(1, 6), st.integers(0, 1000))
    @settings(max_examples=40, deadline=None)
    def test_residual_small_on_random_spd(self, n, seed):
        rng = np.random.default_rng(seed)
        m = rng.standard_normal((n, n))
        a = m @ m.T + n * np.eye(n)
        b = rng.standard_normal(n)
        x = linalg.solve(a, b)
        assert np.linalg.norm(a @ x - b) <= 1e-10 * max(1.0, np.linalg.norm(b))


class TestOrthonormalize:
    def test_unit_norm_and_orthogonality(self):
        rng = np.random.default_rng(9)
        basis = np.linalg.qr(rng.standard_normal((10, 3)))[0]
        v = rng.standard_normal(10)
        col = linalg.orthonormalize(v, basis)
        assert np.isclose(np.linalg.norm(col), 1.0, atol=1e-12)
        assert np.abs(basis.T @ col).max() < 1e-12

    def test_weighted_inner_product(self):
        rng = np.random.default_rng(10)
        m = rng.standard_normal((8, 8))
        gram = m @ m.T + 8 * np.eye(8)
        first = linalg.orthonormalize(rng.standard_normal(8), np.zeros((8, 0)), gram)
        second = linalg.orthonormalize(rng.standard_normal(8),
                                       first.reshape(-1, 1), gram)
        assert np.isclose(first @ (gram @ first), 1.0, atol=1e-12)
        assert abs(first @ (gram @ second)) < 1e-11

    def test_deflation_returns_none(self):
        basis = np.eye(4)[:, :2]
        dependent = basis @ np.array([2.0, -1.0])
        assert linalg.orthonormalize(dependent, basis) is None
