"""Reduced-basis construction (POD and greedy) and the projected online solver.

The reduced system stores only N-sized data; the online solve never touches
an object of full-order dimension. Serialization writes a JSON manifest plus
an npz payload so a reduced model can be reloaded without the full-order
system.
"""

import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .fom import THETA_REGISTRY, fom_solve


@dataclass
class SnapshotSet:
    """Full-order solutions stored column-wise, aligned with their parameters."""

    matrix: np.ndarray
    parameters: list

    def __post_init__(self):
        self.matrix = linalg.check_matrix(self.matrix, "snapshot matrix")
        params = [np.atleast_1d(np.asarray(p, dtype=float)) for p in self.parameters]
        if self.matrix.shape[1] != len(params):
            raise ValueError("snapshot column count must equal parameter count")
        seen = set()
        for p in params:
            key = tuple(p.tolist())
            if key in seen:
                raise ValueError(f"duplicate parameter point {p}")
            seen.add(key)
        self.parameters = params


@dataclass
class ReducedBasis:
    """Orthonormal column basis in the gram inner product.

    ``singular_values`` holds the full spectrum (retained and neglected) on
    the POD path and is empty on the greedy path; ``selected_parameters``
    records the greedy parameter sequence.
    """

    basis: np.ndarray
    gram: object = None
    singular_values: np.ndarray = field(default_factory=lambda: np.array([]))
    selected_parameters: list = field(default_factory=list)
    history: list = field(default_factory=list)  # greedy (N, max_delta) pairs
    saturated: bool = False

    @property
    def size(self):
        return self.basis.shape[1]


def _gram_apply(gram, x):
    if gram is None:
        return x
    return gram @ x


def pod(snapshots, gram=None, rank=None, energy=None):
    """Best low-rank basis of a snapshot set in the gram-weighted sense.

    Computed by the method of snapshots: eigendecomposition of the small
    gram-weighted correlation matrix. Truncation either at a fixed ``rank``
    or at the smallest N whose plain singular-value sum reaches the
    ``energy`` fraction of the total sum.
    """
    if (rank is None) == (energy is None):
        raise ValueError("exactly one of rank / energy must be given")
    s = snapshots.matrix
    n_max = s.shape[1]
    if np.abs(s).max() == 0.0:
        raise ValueError("snapshot matrix is identically zero, no basis derivable")
    corr = s.T @ _gram_apply(gram, s)
    corr = 0.5 * (corr + corr.T)
    lam, z = linalg.sym_eig(corr)
    lam = np.clip(lam, 0.0, None)
    sigma = np.sqrt(lam)

    if rank is not None:
        if not 1 <= rank <= n_max:
            raise ValueError("rank must be between 1 and the snapshot count")
        n = int(rank)
    else:
        if not 0.0 < energy <= 1.0:
            raise ValueError("energy fraction must lie in (0, 1]")
        ratios = np.cumsum(sigma) / sigma.sum()
        n = int(np.searchsorted(ratios, energy - 1e-15) + 1)
        n = min(n, n_max)
    # drop numerically zero modes that cannot be normalized
    n = min(n, int(np.sum(sigma > 1e-14 * sigma[0])))
    if n == 0:
        raise ValueError("requested basis has no nonzero modes")

    modes = s @ (z[:, :n] / sigma[:n])
    # re-orthonormalize against round-off from the method of snapshots
    basis = np.zeros((s.shape[0], 0))
    for k in range(n):
        col = linalg.orthonormalize(modes[:, k], basis, gram)
        if col is None:
            break
        # deterministic sign: largest-magnitude entry positive
        if col[np.argmax(np.abs(col))] < 0:
            col = -col
        basis = np.column_stack([basis, col])
    return ReducedBasis(basis=basis, gram=gram, singular_values=sigma)


def greedy(system, training_set, tol, mu1, n_max, estimator):
    """Iterative basis enrichment at the worst-estimated parameter.

    ``estimator`` must provide ``delta_function(system, basis)`` returning a
    callable evaluating the error bound at a parameter point. Records the
    per-iteration (N, max bound) history; stops on tolerance, basis size cap
    or snapshot deflation (saturation).
    """
    training = [np.atleast_1d(np.asarray(m, dtype=float)) for m in training_set]
    if not training:
        raise ValueError("training set must be nonempty")
    mu1 = np.atleast_1d(np.asarray(mu1, dtype=float))
    gram = system.gram

    u1 = fom_solve(system, mu1).coefficients
    zeta = linalg.orthonormalize(u1, np.zeros((system.dof_count, 0)), gram)
    if zeta is None:
        raise ValueError("initial snapshot is numerically zero")
    basis = ReducedBasis(
        basis=zeta.reshape(-1, 1), gram=gram, selected_parameters=[mu1]
    )

    while True:
        delta = estimator.delta_function(system, basis)
        bounds = np.array([delta(mu) for mu in training])
        j_star = int(np.argmax(bounds))  # argmax ties -> smallest index
        max_delta = float(bounds[j_star])
        basis.history.append((basis.size, max_delta))
        if max_delta <= tol or basis.size >= n_max:
            return basis
        mu_star = training[j_star]
        u_star = fom_solve(system, mu_star).coefficients
        zeta = linalg.orthonormalize(u_star, basis.basis, gram)
        if zeta is None:
            basis.saturated = True
            return basis
        basis.basis = np.column_stack([basis.basis, zeta])
        basis.selected_parameters.append(mu_star)


@dataclass
class RomSystem:
    """Galerkin-projected affine system: dense N x N terms, no full-order data.

    ``basis`` is kept only as a reference for lifting; the online solve must
    not read it.
    """

    reduced_matrix_terms: list
    reduced_rhs_terms: list
    reduced_output_terms: list
    theta_a: callable
    theta_f: callable
    theta_l: callable
    basis: ReducedBasis = None
    theta_name: str = None

    @property
    def size(self):
        return self.reduced_matrix_terms[0].shape[0]


def project(system, basis):
    """Precompute the reduced affine terms V^T A_i V, V^T f_i, V^T l_i."""
    v = basis.basis
    if v.shape[0] != system.dof_count:
        raise ValueError("basis dimension does not match the system")
    reduced_a = [np.asarray(v.T @ (a @ v)) for a in system.matrix_terms]
    reduced_f = [np.asarray(v.T @ f) for f in system.rhs_terms]
    reduced_l = [np.asarray(v.T @ l) for l in system.output_terms]
    return RomSystem(
        reduced_matrix_terms=reduced_a,
        reduced_rhs_terms=reduced_f,
        reduced_output_terms=reduced_l,
        theta_a=system.theta_a,
        theta_f=system.theta_f,
        theta_l=system.theta_l,
        basis=basis,
        theta_name=system.theta_name,
    )


def rom_solve(rom, mu):
    """Dense N x N online solve; cost independent of the full-order size."""
    theta_a = np.atleast_1d(np.asarray(rom.theta_a(mu), dtype=float))
    theta_f = np.atleast_1d(np.asarray(rom.theta_f(mu), dtype=float))
    a = np.zeros((rom.size, rom.size))
    for q, aq in enumerate(rom.reduced_matrix_terms):
        a += theta_a[q] * aq
    f = np.zeros(rom.size)
    for q, fq in enumerate(rom.reduced_rhs_terms):
        f += theta_f[q] * fq
    u_n = linalg.solve(a, f)
    theta_l = np.atleast_1d(np.asarray(rom.theta_l(mu), dtype=float))
    s_n = 0.0
    for q, lq in enumerate(rom.reduced_output_terms):
        s_n += theta_l[q] * float(lq @ u_n)
    return u_n, s_n


def lift(basis, u_n):
    """Expand reduced coefficients to full-order coordinates."""
    u_n = np.asarray(u_n, dtype=float)
    if u_n.shape[0] != basis.size:
        raise ValueError("coefficient length does not match basis size")
    return basis.basis @ u_n


ROM_FORMAT_VERSION = 1


def save_rom(rom, directory):
    """Write the reduced model as manifest.json + payload.npz.

    Requires theta maps identified by a registered name so the model can be
    reattached to its parameter dependency on load.
    """
    if rom.theta_name is None or rom.theta_name not in THETA_REGISTRY:
        raise ValueError(
            "serialization requires theta maps registered by name "
            f"(got {rom.theta_name!r})"
        )
    os.makedirs(directory, exist_ok=True)
    basis = rom.basis
    manifest = {
        "format_version": ROM_FORMAT_VERSION,
        "size": rom.size,
        "q_a": len(rom.reduced_matrix_terms),
        "q_f": len(rom.reduced_rhs_terms),
        "q_l": len(rom.reduced_output_terms),
        "theta_name": rom.theta_name,
        "selected_parameters": [
            list(map(float, p)) for p in (basis.selected_parameters if basis else [])
        ],
        "singular_values": [
            float(s) for s in (basis.singular_values if basis is not None else [])
        ],
    }
    with open(os.path.join(directory, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
    payload = {}
    for q, aq in enumerate(rom.reduced_matrix_terms):
        payload[f"a_{q}"] = aq
    for q, fq in enumerate(rom.reduced_rhs_terms):
        payload[f"f_{q}"] = fq
    for q, lq in enumerate(rom.reduced_output_terms):
        payload[f"l_{q}"] = lq
    np.savez(os.path.join(directory, "payload.npz"), **payload)


def load_rom(directory):
    """Load a reduced model saved by :func:`save_rom` (no basis attached)."""
    with open(os.path.join(directory, "manifest.json"), encoding="utf-8") as fh:
        manifest = json.load(fh)
    if manifest.get("format_version") != ROM_FORMAT_VERSION:
        raise ValueError("unsupported reduced-model format version")
    name = manifest["theta_name"]
    if name not in THETA_REGISTRY:
        raise ValueError(f"unknown theta registry entry {name!r}")
    theta_a, theta_f, theta_l = THETA_REGISTRY[name]
    with np.load(os.path.join(directory, "payload.npz")) as payload:
        reduced_a = [payload[f"a_{q}"] for q in range(manifest["q_a"])]
        reduced_f = [payload[f"f_{q}"] for q in range(manifest["q_f"])]
        reduced_l = [payload[f"l_{q}"] for q in range(manifest["q_l"])]
    return RomSystem(
        reduced_matrix_terms=reduced_a,
        reduced_rhs_terms=reduced_f,
        reduced_output_terms=reduced_l,
        theta_a=theta_a,
        theta_f=theta_f,
        theta_l=theta_l,
        basis=None,
        theta_name=name,
    )
