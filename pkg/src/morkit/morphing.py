"""Geometry parametrization maps: FFD lattice, RBF interpolation, IDW.

All three morphs separate x-dependent weights (precomputable once per point
set) from the parameter-dependent control data, and deform arbitrary point
clouds in 2-d or 3-d.
"""

import json
from dataclasses import dataclass

import numpy as np
from scipy.special import comb


class MorphBuildError(ValueError):
    """Raised when a morph cannot be constructed from the given data."""


# ---------------------------------------------------------------------------
# free-form deformation


@dataclass
class FfdLattice:
    """Bernstein control lattice with an affine physical-to-unit map.

    ``origin``/``axes`` define the affine map psi(x) = axes^-1 (x - origin)
    to lattice coordinates in [0,1]^d; ``displacements`` holds the control
    point offsets (lattice-coordinate units resolved through the axes), shape
    (degrees[0]+1, ..., degrees[d-1]+1, d).
    """

    origin: np.ndarray
    axes: np.ndarray
    degrees: tuple
    displacements: np.ndarray

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=float)
        self.axes = np.asarray(self.axes, dtype=float)
        d = self.origin.shape[0]
        if self.axes.shape != (d, d):
            raise MorphBuildError("axes must be a square matrix matching the origin")
        if abs(np.linalg.det(self.axes)) < 1e-14:
            raise MorphBuildError("lattice affine map is not invertible")
        self.degrees = tuple(int(k) for k in self.degrees)
        if len(self.degrees) != d:
            raise MorphBuildError("one polynomial degree per spatial direction")
        expected = tuple(k + 1 for k in self.degrees) + (d,)
        self.displacements = np.asarray(self.displacements, dtype=float)
        if self.displacements.shape != expected:
            raise MorphBuildError(
                f"displacement array must have shape {expected}, "
                f"got {self.displacements.shape}"
            )
        self._axes_inv = np.linalg.inv(self.axes)

    @property
    def dim(self):
        return self.origin.shape[0]


def _bernstein_weights(t, degree):
    """All Bernstein polynomials of the given degree at points t (1-d array)."""
    k = np.arange(degree + 1)
    t = t[:, None]
    return comb(degree, k) * t ** k * (1.0 - t) ** (degree - k)


def ffd_weights(lattice, points):
    """Per-point tensor-Bernstein weights, reusable across displacements.

    Returns ``(weights, inside)`` where weights has one row per point (zeros
    for points outside the unit lattice image, which stay fixed).
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    local = (points - lattice.origin) @ lattice._axes_inv.T
    inside = np.all((local >= -1e-12) & (local <= 1.0 + 1e-12), axis=1)
    n_ctrl = int(np.prod([k + 1 for k in lattice.degrees]))
    weights = np.zeros((points.shape[0], n_ctrl))
    if inside.any():
        per_dir = [
            _bernstein_weights(np.clip(local[inside, a], 0.0, 1.0), deg)
            for a, deg in enumerate(lattice.degrees)
        ]
        w = per_dir[0]
        for nxt in per_dir[1:]:
            w = np.einsum("pi,pj->pij", w, nxt).reshape(w.shape[0], -1)
        weights[inside] = w
    return weights, inside


def ffd_deform(lattice, points, weights=None):
    """Deform a point cloud through the Bernstein lattice.

    ``weights`` may be the precomputed output of :func:`ffd_weights` for the
    same point set; otherwise it is computed on the fly.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if weights is None:
        weights = ffd_weights(lattice, points)
    w, inside = weights
    disp_flat = lattice.displacements.reshape(-1, lattice.dim)
    local_disp = w @ disp_flat
    deformed = points + local_disp @ lattice.axes.T
    deformed[~inside] = points[~inside]
    return deformed


# ---------------------------------------------------------------------------
# radial basis function interpolation

def _phi_gaussian(r, radius):
    return np.exp(-(r ** 2) / radius)


def _phi_thin_plate(r, radius):
    q = r / radius
    out = np.zeros_like(q)
    mask = q > 0.0
    out[mask] = q[mask] ** 2 * np.log(q[mask])
    return out


def _phi_wendland_c2(r, radius):
    q = np.clip(1.0 - r / radius, 0.0, None)
    return q ** 4 * (4.0 * r / radius + 1.0)


def _phi_multiquadric(r, radius):
    return np.sqrt(r ** 2 + radius ** 2)


def _phi_inverse_multiquadric(r, radius):
    return 1.0 / np.sqrt(r ** 2 + radius ** 2)


RBF_KERNELS = {
    "gaussian": _phi_gaussian,
    "thin-plate": _phi_thin_plate,
    "wendland-c2": _phi_wendland_c2,
    "multiquadric": _phi_multiquadric,
    "inverse-multiquadric": _phi_inverse_multiquadric,
}


@dataclass
class RbfMorph:
    """Built RBF deformation: kernel weights plus an affine polynomial part."""

    kernel: str
    radius: float
    control_points: np.ndarray
    deformed_points: np.ndarray
    weights: np.ndarray  # gamma, one column per spatial component
    poly_const: np.ndarray  # c
    poly_matrix: np.ndarray  # Q, applied as x -> Q x

    @property
    def dim(self):
        return self.control_points.shape[1]


def _pairwise_distances(a, b):
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt(np.sum(diff ** 2, axis=2))


def bounding_box_diagonal(points):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    return float(np.linalg.norm(points.max(axis=0) - points.min(axis=0)))


def rbf_build(control_points, deformed_points, kernel="gaussian", radius=None):
    """Solve the constrained interpolation system for an RBF morph.

    The kernel block plus the degree-one polynomial block is completed with
    zero-sum and zero-moment constraint rows; one factorization is shared by
    all spatial components.
    """
    x_c = np.atleast_2d(np.asarray(control_points, dtype=float))
    y_c = np.atleast_2d(np.asarray(deformed_points, dtype=float))
    if x_c.shape != y_c.shape:
        raise MorphBuildError("control and deformed point arrays must match")
    n_c, d = x_c.shape
    if n_c < d + 1:
        raise MorphBuildError(f"need at least {d + 1} control points in {d}-d")
    if kernel not in RBF_KERNELS:
        raise MorphBuildError(
            f"unknown kernel {kernel!r}; choose from {sorted(RBF_KERNELS)}"
        )
    if radius is None:
        radius = bounding_box_diagonal(x_c)
    if radius <= 0.0:
        raise MorphBuildError("kernel radius must be positive")

    dist = _pairwise_distances(x_c, x_c)
    if np.any(dist[~np.eye(n_c, dtype=bool)] < 1e-14 * max(radius, 1.0)):
        raise MorphBuildError("duplicate control points make the system singular")

    phi = RBF_KERNELS[kernel](dist, radius)
    poly = np.column_stack([np.ones(n_c), x_c])  # 1, x_1 ... x_d
    size = n_c + d + 1
    system = np.zeros((size, size))
    system[:n_c, :n_c] = phi
    system[:n_c, n_c:] = poly
    system[n_c:, :n_c] = poly.T
    rhs = np.zeros((size, d))
    rhs[:n_c, :] = y_c
    try:
        sol = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError as exc:
        raise MorphBuildError(
            "singular interpolation system (degenerate control geometry)"
        ) from exc
    gamma = sol[:n_c, :]
    poly_const = sol[n_c, :]
    poly_matrix = sol[n_c + 1 :, :].T
    return RbfMorph(
        kernel=kernel,
        radius=float(radius),
        control_points=x_c,
        deformed_points=y_c,
        weights=gamma,
        poly_const=poly_const,
        poly_matrix=poly_matrix,
    )


def rbf_deform(morph, points):
    """Evaluate the RBF map on a point cloud."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    dist = _pairwise_distances(points, morph.control_points)
    phi = RBF_KERNELS[morph.kernel](dist, morph.radius)
    return morph.poly_const + points @ morph.poly_matrix.T + phi @ morph.weights


# ---------------------------------------------------------------------------
# inverse distance weighting


@dataclass
class IdwMorph:
    """Shepard interpolation of control-point displacements."""

    control_points: np.ndarray
    deformed_points: np.ndarray
    exponent: int = 2

    def __post_init__(self):
        self.control_points = np.atleast_2d(np.asarray(self.control_points, dtype=float))
        self.deformed_points = np.atleast_2d(np.asarray(self.deformed_points, dtype=float))
        if self.control_points.shape != self.deformed_points.shape:
            raise MorphBuildError("control and deformed point arrays must match")
        if int(self.exponent) < 1:
            raise MorphBuildError("exponent must be a positive integer")
        self.exponent = int(self.exponent)
        dist = _pairwise_distances(self.control_points, self.control_points)
        n_c = self.control_points.shape[0]
        scale = max(bounding_box_diagonal(self.control_points), 1.0)
        if n_c > 1 and dist[~np.eye(n_c, dtype=bool)].min() < 1e-14 * scale:
            raise MorphBuildError("control points must be pairwise distinct")


def idw_weights(morph, points):
    """Normalized inverse-distance weights, one row per evaluation point.

    Points that coincide with a control point (within a bounding-box-scaled
    threshold) take weight one there and zero elsewhere.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    dist = _pairwise_distances(points, morph.control_points)
    scale = max(bounding_box_diagonal(morph.control_points), 1.0)
    exact = dist < 1e-14 * scale
    with np.errstate(divide="ignore"):
        raw = np.where(dist > 0.0, dist, 1.0) ** (-morph.exponent)
        raw[dist == 0.0] = np.inf
    weights = np.zeros_like(dist)
    hit_rows = exact.any(axis=1)
    if hit_rows.any():
        first_hit = np.argmax(exact[hit_rows], axis=1)
        weights[np.flatnonzero(hit_rows), first_hit] = 1.0
    free = ~hit_rows
    if free.any():
        weights[free] = raw[free] / raw[free].sum(axis=1, keepdims=True)
    return weights


def idw_deform(morph, points, weights=None):
    """Evaluate the IDW map; ``weights`` may come from :func:`idw_weights`.

    The weights interpolate the control-point displacement field, so regions
    far from every displaced control still move by the blended displacement
    rather than collapsing onto the control positions.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if weights is None:
        weights = idw_weights(morph, points)
    return points + weights @ (morph.deformed_points - morph.control_points)


# ---------------------------------------------------------------------------
# file formats


def read_point_cloud(path):
    """Whitespace-delimited text, one point per line."""
    pts = np.loadtxt(path, ndmin=2)
    return pts


def write_point_cloud(path, points):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    with open(path, "w", encoding="utf-8") as fh:
        for row in points:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def morph_from_descriptor(descriptor):
    """Build a morph from a parsed JSON descriptor (dict)."""
    kind = descriptor.get("type")
    if kind == "ffd":
        return FfdLattice(
            origin=np.asarray(descriptor["origin"], dtype=float),
            axes=np.asarray(descriptor["axes"], dtype=float),
            degrees=tuple(descriptor["degrees"]),
            displacements=np.asarray(descriptor["displacements"], dtype=float),
        )
    if kind == "rbf":
        return rbf_build(
            control_points=descriptor["control_points"],
            deformed_points=descriptor["deformed_points"],
            kernel=descriptor.get("kernel", "gaussian"),
            radius=descriptor.get("radius"),
        )
    if kind == "idw":
        return IdwMorph(
            control_points=np.asarray(descriptor["control_points"], dtype=float),
            deformed_points=np.asarray(descriptor["deformed_points"], dtype=float),
            exponent=descriptor.get("exponent", 2),
        )
    raise MorphBuildError(f"unknown morph type {kind!r}")


def load_descriptor(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def deform(morph, points):
    """Dispatch deformation over the three morph kinds."""
    if isinstance(morph, FfdLattice):
        return ffd_deform(morph, points)
    if isinstance(morph, RbfMorph):
        return rbf_deform(morph, points)
    if isinstance(morph, IdwMorph):
        return idw_deform(morph, points)
    raise TypeError(f"not a morph: {type(morph)!r}")
