"""Empirical interpolation family: EIM, DEIM, matrix DEIM and gappy least squares.

Greedy builders select hierarchical basis columns and "magic" sample indices;
evaluation reconstructs a full field (or operator) from values at those few
indices alone.
"""

import json
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import linalg


@dataclass
class FunctionSamples:
    """Sampled function values: rows are spatial points, columns parameters."""

    values: np.ndarray
    points: np.ndarray = None
    parameters: list = None

    def __post_init__(self):
        self.values = linalg.check_matrix(self.values, "sample matrix")
        if self.points is not None:
            self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
            if self.points.shape[0] != self.values.shape[0]:
                raise ValueError("point count must match the sample row count")
        if self.parameters is not None and len(self.parameters) != self.values.shape[1]:
            raise ValueError("parameter count must match the sample column count")


@dataclass
class EimBasis:
    """Hierarchical interpolation basis with its magic indices.

    ``interp_matrix`` is the unit-lower-triangular collocation matrix
    (basis rows at the magic indices).
    """

    basis: np.ndarray
    magic_indices: list
    interp_matrix: np.ndarray
    error_history: list
    selected_parameter_indices: list

    @property
    def size(self):
        return self.basis.shape[1]


@dataclass
class DeimBasis:
    """Orthonormal interpolation modes with greedily selected sample indices."""

    basis: np.ndarray
    magic_indices: list
    singular_values: np.ndarray = field(default_factory=lambda: np.array([]))
    error_history: list = field(default_factory=list)
    matrix_shape: tuple = None  # set for operator (vectorized-matrix) bases

    @property
    def size(self):
        return self.basis.shape[1]

    def magic_entries(self):
        """Magic indices mapped back to (row, col) operator entries."""
        if self.matrix_shape is None:
            raise ValueError("not an operator basis")
        n_rows, n_cols = self.matrix_shape
        return [(i % n_rows, i // n_rows) for i in self.magic_indices]


def _column_norms(r, p_norm):
    if p_norm == np.inf or p_norm == "inf":
        return np.abs(r).max(axis=0)
    if p_norm == 2:
        return np.linalg.norm(r, axis=0)
    raise ValueError("p_norm must be 2 or inf")


def _eim_residual(f, basis, indices):
    """Residual of interpolating every column of f at the magic indices."""
    if not indices:
        return f.copy()
    t = basis[indices, :]
    coeff = scipy.linalg.solve_triangular(t, f[indices, :], lower=True,
                                          unit_diagonal=True)
    return f - basis @ coeff


def eim_build(samples, tol=1e-12, n_max=None, p_norm=np.inf):
    """Greedy empirical-interpolation basis from a sample matrix.

    Column selection maximizes the p-norm interpolation residual, the magic
    index maximizes the pointwise residual of that column, and the normalized
    residual column is appended. The recorded error history uses the
    up-to-date interpolant after each append, so it is non-increasing and the
    stopping test reflects the current basis.
    """
    if tol <= 0.0:
        raise ValueError("tolerance must be positive")
    f = samples.values
    m, n_cols = f.shape
    if np.abs(f).max() == 0.0:
        raise ValueError("sample matrix is identically zero")
    if n_max is None:
        n_max = min(m, n_cols)

    basis = np.zeros((m, 0))
    indices = []
    selected_cols = []
    history = []

    residual = f.copy()
    while basis.shape[1] < n_max:
        col_err = _column_norms(residual, p_norm)
        j_k = int(np.argmax(col_err))
        r_col = residual[:, j_k]
        i_k = int(np.argmax(np.abs(r_col)))
        denom = r_col[i_k]
        if abs(denom) < 1e-14:
            break  # saturation: training data numerically in the span
        basis = np.column_stack([basis, r_col / denom])
        indices.append(i_k)
        selected_cols.append(j_k)
        residual = _eim_residual(f, basis, indices)
        eps = float(_column_norms(residual, p_norm).max())
        history.append(eps)
        if eps <= tol:
            break

    t = basis[indices, :]
    return EimBasis(
        basis=basis,
        magic_indices=indices,
        interp_matrix=t,
        error_history=history,
        selected_parameter_indices=selected_cols,
    )


def eim_coefficients(basis, values_at_magic_points):
    """Interpolation coefficients by forward substitution on the unit-lower T."""
    v = np.asarray(values_at_magic_points, dtype=float)
    if v.shape[0] != basis.size:
        raise ValueError("expected one value per magic point")
    return scipy.linalg.solve_triangular(
        basis.interp_matrix, v, lower=True, unit_diagonal=True
    )


def eim_interpolate(basis, values_at_magic_points):
    """Reconstruct the full field from its values at the magic points."""
    return basis.basis @ eim_coefficients(basis, values_at_magic_points)


def lebesgue_constant(basis):
    """Discrete Lebesgue constant: max absolute row sum of the Lagrange matrix."""
    t_inv = scipy.linalg.solve_triangular(
        basis.interp_matrix, np.eye(basis.size), lower=True, unit_diagonal=True
    )
    lagrange = basis.basis @ t_inv
    constant = float(np.abs(lagrange).sum(axis=1).max())
    bound = 2.0 ** basis.size - 1.0
    if constant > bound * (1.0 + 1e-9):
        raise AssertionError(
            f"Lebesgue constant {constant} exceeds the 2^Q - 1 bound {bound}"
        )
    return constant


def deim_build(snapshots, tol=1e-10, n_max=None):
    """Interpolation basis from POD modes with greedy index selection.

    The stopping error is the relative Frobenius reconstruction error of the
    snapshot matrix from its currently sampled rows.
    """
    s = linalg.check_matrix(snapshots, "snapshot matrix")
    if np.abs(s).max() == 0.0:
        raise ValueError("snapshot matrix is identically zero")
    svd = linalg.svd(s)
    sigma = svd.singular_values
    keep = int(np.sum(sigma > 1e-12 * sigma[0]))
    modes = svd.left_vectors[:, :keep]
    if n_max is not None:
        keep = min(keep, n_max)
    s_norm = np.linalg.norm(s)

    indices = [int(np.argmax(np.abs(modes[:, 0])))]
    history = []
    q = 1
    while True:
        h_q = modes[:, :q]
        pth = h_q[indices, :]
        try:
            coeff = np.linalg.solve(pth, s[indices, :])
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(
                "singular sampled-row system during index selection"
            ) from exc
        eps = float(np.linalg.norm(s - h_q @ coeff) / s_norm)
        history.append(eps)
        if eps <= tol or q >= keep:
            break
        # next index from the residual of the next mode
        c = np.linalg.solve(pth, modes[indices, q])
        r = modes[:, q] - h_q @ c
        i_k = int(np.argmax(np.abs(r)))
        if i_k in indices:  # guarded: cannot happen with independent modes
            raise RuntimeError("repeated interpolation index")
        indices.append(i_k)
        q += 1
    return DeimBasis(
        basis=modes[:, :q],
        magic_indices=indices,
        singular_values=sigma,
        error_history=history,
    )


def deim_eval(basis, sampled_values):
    """Reconstruct a full vector from its entries at the magic indices."""
    v = np.asarray(sampled_values, dtype=float)
    if v.shape[0] != basis.size:
        raise ValueError("expected one sampled value per magic index")
    pth = basis.basis[basis.magic_indices, :]
    return basis.basis @ np.linalg.solve(pth, v)


def deim_coefficients(basis, sampled_values):
    """Expansion coefficients from entries at the magic indices."""
    v = np.asarray(sampled_values, dtype=float)
    pth = basis.basis[basis.magic_indices, :]
    return np.linalg.solve(pth, v)


def mdeim_build(operator_snapshots, tol=1e-10, n_max=None):
    """Matrix variant: the builder runs on vectorized operator snapshots."""
    mats = [np.asarray(a.todense()) if hasattr(a, "todense") else np.asarray(a, dtype=float)
            for a in operator_snapshots]
    shape = mats[0].shape
    for a in mats:
        if a.shape != shape:
            raise ValueError("operator snapshots must share one shape")
    stacked = np.column_stack([a.reshape(-1, order="F") for a in mats])
    basis = deim_build(stacked, tol=tol, n_max=n_max)
    basis.matrix_shape = shape
    return basis


def mdeim_matrix_coefficients(basis, operator):
    """Expansion coefficients of an operator from its magic entries."""
    a = np.asarray(operator.todense()) if hasattr(operator, "todense") else np.asarray(operator, dtype=float)
    sampled = np.array([a[i, j] for i, j in basis.magic_entries()])
    return deim_coefficients(basis, sampled)


def mdeim_reconstruct(basis, operator):
    """Reconstruct a full operator matrix from its magic entries."""
    vec = basis.basis @ mdeim_matrix_coefficients(basis, operator)
    return vec.reshape(basis.matrix_shape, order="F")


def mdeim_nonlinear_solve(problem, a_basis, c_basis, mu, tol=1e-9, max_iter=100):
    """Newton-type solve with both operators replaced by their interpolants.

    ``problem`` must expose ``mass``, ``forcing``, ``diffusion_matrix(mu)``
    and ``convection_matrix(u)``; the exact operators enter only through
    their magic entries. The Jacobian drops the derivative of the
    solution-dependent coefficients, so the iteration is quasi-Newton.
    """
    mass = problem.mass.toarray() if hasattr(problem.mass, "toarray") else np.asarray(problem.mass)
    f = np.asarray(problem.forcing, dtype=float)
    u = np.zeros(f.shape[0])
    for _ in range(max_iter):
        a_rec = mdeim_reconstruct(a_basis, problem.diffusion_matrix(mu))
        c_rec = mdeim_reconstruct(c_basis, problem.convection_matrix(u))
        op = mass + a_rec + c_rec
        r = op @ u - f
        if np.linalg.norm(r) <= tol:
            return u
        u = u - np.linalg.solve(op, r)
    r_norm = float(np.linalg.norm(r))
    raise RuntimeError(
        f"operator-interpolated iteration stalled at residual {r_norm:.3e}"
    )


def gappy_fit(basis, sample_indices, sampled_values):
    """Least-squares coefficients from more sample indices than basis columns."""
    basis = linalg.check_matrix(basis, "gappy basis")
    idx = list(sample_indices)
    if len(idx) < basis.shape[1]:
        raise ValueError("need at least as many sample indices as basis columns")
    rows = basis[idx, :]
    if np.linalg.matrix_rank(rows) < basis.shape[1]:
        raise ValueError("sampled rows are rank deficient")
    coeff, _, _, _ = np.linalg.lstsq(rows, np.asarray(sampled_values, dtype=float),
                                     rcond=None)
    return coeff


def export_eim_basis(basis, directory, points=None):
    """Write an interpolation basis as CSV matrices plus a JSON manifest."""
    os.makedirs(directory, exist_ok=True)
    np.savetxt(os.path.join(directory, "basis.csv"), basis.basis,
               delimiter=",", fmt="%.17g")
    manifest = {
        "q": basis.size,
        "magic_indices": [int(i) for i in basis.magic_indices],
        "error_history": [float(e) for e in basis.error_history],
    }
    with open(os.path.join(directory, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
    if points is not None:
        np.savetxt(os.path.join(directory, "magic_points.csv"),
                   np.atleast_2d(points)[basis.magic_indices],
                   delimiter=",", fmt="%.17g")
