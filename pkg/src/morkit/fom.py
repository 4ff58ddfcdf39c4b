"""Full-order parametrized toy problems on structured grids.

Provides the generic affine-system container plus three concrete problems:
a two-material heat-conduction block with a moving interface, a Poisson
problem with a parametrized Gaussian forcing, and a small nonlinear
diffusion problem used by the operator hyper-reduction demo.

Discretization is bilinear quadrilateral finite elements on a uniform grid,
with symmetric elimination of Dirichlet rows/columns so assembled operators
stay SPD. Matrices are stored sparse (CSR); everything downstream that needs
dense data densifies explicitly.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

# reference element matrices on [0,1]^2, node order (0,0),(1,0),(1,1),(0,1)
_KX_REF = np.array(
    [[2, -2, -1, 1], [-2, 2, 1, -1], [-1, 1, 2, -2], [1, -1, -2, 2]], dtype=float
) / 6.0
_KY_REF = np.array(
    [[2, 1, -1, -2], [1, 2, -2, -1], [-1, -2, 2, 1], [-2, -1, 1, 2]], dtype=float
) / 6.0
_M_REF = np.array(
    [[4, 2, 1, 2], [2, 4, 2, 1], [1, 2, 4, 2], [2, 1, 2, 4]], dtype=float
) / 36.0


@dataclass(frozen=True)
class ParamDomain:
    """Box parameter domain in R^p."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ValueError("lower/upper bounds must be 1-d arrays of equal length")
        if not np.all(lower < upper):
            raise ValueError("lower bounds must be strictly below upper bounds")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self):
        return self.lower.shape[0]

    def contains(self, mu, rtol=0.0):
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        pad = rtol * (self.upper - self.lower)
        return bool(np.all(mu >= self.lower - pad) and np.all(mu <= self.upper + pad))

    def sample(self, n, seed):
        rng = np.random.default_rng(seed)
        return self.lower + (self.upper - self.lower) * rng.random((n, self.dim))

    def uniform_grid(self, points_per_dim):
        """Tensor grid of parameter points, strictly inside the open box."""
        axes = [
            np.linspace(lo, hi, points_per_dim + 2)[1:-1]
            for lo, hi in zip(self.lower, self.upper)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


@dataclass
class AffineSystem:
    """Parametrized linear system as theta-weighted sums of constant terms.

    ``matrix_terms`` holds the Q_a constant stiffness contributions,
    ``rhs_terms`` the Q_f load contributions; ``theta_a``/``theta_f`` map a
    parameter point to the corresponding weight vectors. ``gram`` is the SPD
    matrix defining the discrete inner product (H1-type, parameter
    independent). The output functional defaults to the load (compliant).
    """

    matrix_terms: list
    rhs_terms: list
    theta_a: callable
    theta_f: callable
    gram: sp.csr_matrix
    domain: ParamDomain
    output_terms: list = None
    theta_l: callable = None
    theta_name: str = None
    nodes: np.ndarray = None  # dof coordinates, for export / diagnostics
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.matrix_terms[0].shape[0]
        for a in self.matrix_terms:
            if a.shape != (n, n):
                raise ValueError("all matrix terms must share the same square shape")
        for f in self.rhs_terms:
            if f.shape != (n,):
                raise ValueError("rhs terms must match the matrix dimension")
        if self.gram.shape != (n, n):
            raise ValueError("gram matrix dimension mismatch")
        if self.output_terms is None:
            self.output_terms = [f for f in self.rhs_terms]
            self.theta_l = self.theta_f
        self._gram_solver = None

    @property
    def dof_count(self):
        return self.matrix_terms[0].shape[0]

    @property
    def q_a(self):
        return len(self.matrix_terms)

    @property
    def q_f(self):
        return len(self.rhs_terms)

    def assemble_matrix(self, mu):
        theta = np.atleast_1d(np.asarray(self.theta_a(mu), dtype=float))
        if theta.shape[0] != self.q_a:
            raise ValueError("theta_a returned a wrong number of weights")
        a = theta[0] * self.matrix_terms[0]
        for q in range(1, self.q_a):
            a = a + theta[q] * self.matrix_terms[q]
        return a

    def assemble_rhs(self, mu):
        theta = np.atleast_1d(np.asarray(self.theta_f(mu), dtype=float))
        f = np.zeros(self.dof_count)
        for q in range(self.q_f):
            f += theta[q] * self.rhs_terms[q]
        return f

    def assemble_output(self, mu):
        theta = np.atleast_1d(np.asarray(self.theta_l(mu), dtype=float))
        l = np.zeros(self.dof_count)
        for q, lq in enumerate(self.output_terms):
            l += theta[q] * lq
        return l

    def gram_solve(self, b):
        """Solve gram x = b, caching the sparse factorization."""
        if self._gram_solver is None:
            try:
                self._gram_solver = spla.factorized(sp.csc_matrix(self.gram))
            except RuntimeError as exc:
                raise np.linalg.LinAlgError(
                    f"gram factorization failed: {exc}"
                ) from exc
        return self._gram_solver(np.asarray(b, dtype=float))

    def gram_norm(self, v):
        return float(np.sqrt(max(v @ (self.gram @ v), 0.0)))


@dataclass(frozen=True)
class FomSolution:
    """Full-order solution at one parameter point."""

    mu: np.ndarray
    coefficients: np.ndarray
    output: float


class NewtonError(RuntimeError):
    """Newton iteration failed to converge; carries the last residual norm."""

    def __init__(self, message, residual_norm):
        super().__init__(message)
        self.residual_norm = residual_norm


def _grid_nodes(n, x0=0.0, x1=1.0, y0=0.0, y1=1.0):
    x = np.linspace(x0, x1, n + 1)
    y = np.linspace(y0, y1, n + 1)
    xx, yy = np.meshgrid(x, y, indexing="ij")
    return np.stack([xx.ravel(), yy.ravel()], axis=1)


def _element_connectivity(n):
    """Local-to-global node indices for each of the n*n elements.

    Node (i, j) on the (n+1)x(n+1) grid has global index i*(n+1)+j, i along x.
    Element (i, j) covers [x_i, x_{i+1}] x [y_j, y_{j+1}].
    """
    conn = np.empty((n * n, 4), dtype=int)
    k = 0
    for i in range(n):
        for j in range(n):
            n00 = i * (n + 1) + j
            n10 = (i + 1) * (n + 1) + j
            conn[k] = (n00, n10, n10 + 1, n00 + 1)
            k += 1
    return conn


def _assemble(conn, n_nodes, local_matrices):
    """Scatter per-element 4x4 matrices into a CSR global matrix."""
    rows = np.repeat(conn, 4, axis=1).ravel()
    cols = np.tile(conn, (1, 4)).ravel()
    data = np.asarray(local_matrices).reshape(len(conn), 16).ravel()
    a = sp.coo_matrix((data, (rows, cols)), shape=(n_nodes, n_nodes))
    return a.tocsr()


def _restrict(matrix, keep):
    return sp.csr_matrix(matrix[np.ix_(keep, keep)])


def theta_thermal(mu):
    """Affine weights of the two-material block with interface parameter mu."""
    mu = float(np.atleast_1d(mu)[0])
    if not 0.0 < mu < 1.0:
        raise ValueError("interface parameter must lie strictly inside (0, 1)")
    return np.array([1.0 / (2.0 * mu), 2.0 * mu, 1.0 / (2.0 - 2.0 * mu), 2.0 - 2.0 * mu])


def _theta_thermal_f(mu):
    return np.array([1.0])


THETA_REGISTRY = {
    "thermal-block": (theta_thermal, _theta_thermal_f, _theta_thermal_f),
}


def assemble_thermal_block(n=32, sigma1=1.0, sigma2=1.0):
    """Two-material heat conduction on the unit square, interface at x = mu.

    Assembled on the reference configuration (interface at 0.5) with the
    x-/y-derivative split per subdomain, giving four affine stiffness terms.
    Unit inflow flux on the x=0 edge provides the single load term; the x=1
    edge carries homogeneous Dirichlet conditions, eliminated symmetrically.
    The output functional is compliant (l = f). Requires even ``n`` so the
    material interface falls on a grid line.
    """
    if n < 3:
        raise ValueError("grid resolution must be at least 3")
    if n % 2 != 0:
        raise ValueError("grid resolution must be even (interface on a grid line)")
    if sigma1 <= 0.0 or sigma2 <= 0.0:
        raise ValueError("conductivities must be positive")

    n_nodes = (n + 1) * (n + 1)
    nodes = _grid_nodes(n)
    conn = _element_connectivity(n)
    h = 1.0 / n
    centers_x = nodes[conn].mean(axis=1)[:, 0]
    left = centers_x < 0.5

    def stiff(mask, sigma, ref):
        local = np.zeros((len(conn), 4, 4))
        local[mask] = sigma * ref  # hx = hy so the aspect factor is 1
        return _assemble(conn, n_nodes, local)

    a1 = stiff(left, sigma1, _KX_REF)
    a2 = stiff(left, sigma1, _KY_REF)
    a3 = stiff(~left, sigma2, _KX_REF)
    a4 = stiff(~left, sigma2, _KY_REF)

    mass = _assemble(conn, n_nodes, np.broadcast_to(h * h * _M_REF, (len(conn), 4, 4)))

    # unit Neumann flux on the x=0 edge: trapezoidal edge load
    load = np.zeros(n_nodes)
    for j in range(n):
        load[j] += h / 2.0
        load[j + 1] += h / 2.0

    keep = np.array([k for k in range(n_nodes) if nodes[k, 0] < 1.0 - 1e-12])

    terms = [_restrict(a, keep) for a in (a1, a2, a3, a4)]
    mass_r = _restrict(mass, keep)
    # H1 inner product at the reference parameter (all theta weights equal 1)
    gram = sp.csr_matrix(sum(terms) + mass_r)
    f = load[keep]

    return AffineSystem(
        matrix_terms=terms,
        rhs_terms=[f],
        theta_a=theta_thermal,
        theta_f=_theta_thermal_f,
        gram=gram,
        # box kept away from the (0,1) endpoints where the theta weights
        # blow up and the certified bound loses accuracy to round-off
        domain=ParamDomain([0.05], [0.95]),
        theta_name="thermal-block",
        nodes=nodes[keep],
        meta={"n": n, "sigma1": sigma1, "sigma2": sigma2},
    )


def thermal_block_direct(n, mu, sigma1=1.0, sigma2=1.0):
    """Direct stiffness assembly on the physically deformed grid.

    The reference grid is mapped so the material interface sits at x = mu;
    used as the truth counterpart of the affine expansion.
    """
    if n % 2 != 0:
        raise ValueError("grid resolution must be even")
    mu = float(np.atleast_1d(mu)[0])
    nodes = _grid_nodes(n)
    xbar = nodes[:, 0]
    x = np.where(xbar <= 0.5, 2.0 * mu * xbar, (2.0 - 2.0 * mu) * xbar + 2.0 * mu - 1.0)
    nodes = np.stack([x, nodes[:, 1]], axis=1)
    conn = _element_connectivity(n)
    hy = 1.0 / n
    n_nodes = (n + 1) * (n + 1)

    local = np.zeros((len(conn), 4, 4))
    for k, elem in enumerate(conn):
        hx = nodes[elem[1], 0] - nodes[elem[0], 0]
        cx = 0.5 * (nodes[elem[1], 0] + nodes[elem[0], 0])
        sigma = sigma1 if cx < mu else sigma2
        local[k] = sigma * ((hy / hx) * _KX_REF + (hx / hy) * _KY_REF)
    a = _assemble(conn, n_nodes, local)
    keep = np.array([k for k in range(n_nodes) if xbar[k] < 1.0 - 1e-12])
    return _restrict(a, keep)


def gaussian_forcing(x, mu):
    """Gaussian heat source centered at the parameter point."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    mu = np.asarray(mu, dtype=float)
    r2 = (x[:, 0] - mu[0]) ** 2 + (x[:, 1] - mu[1]) ** 2
    return np.exp(-2.0 * r2)


def assemble_gaussian_poisson(n=24, alpha_t=1.0):
    """Poisson problem on [-1,1]^2 with a parameter-dependent Gaussian source.

    The stiffness part is parameter independent (one affine term, weight
    alpha_t); the right-hand side is left symbolic as the forcing map so it
    can be treated by empirical interpolation. Homogeneous Dirichlet
    conditions on the whole boundary.

    Returns ``(system, forcing)`` where ``system.rhs_terms`` is empty and
    ``forcing(x, mu)`` evaluates the source. The system's ``meta`` carries the
    full-grid node coordinates, the interior index list and the full mass
    matrix needed to turn nodal forcing values into consistent loads.
    """
    if n < 3:
        raise ValueError("grid resolution must be at least 3")
    if alpha_t <= 0.0:
        raise ValueError("conductivity must be positive")
    n_nodes = (n + 1) * (n + 1)
    nodes = _grid_nodes(n, -1.0, 1.0, -1.0, 1.0)
    conn = _element_connectivity(n)
    h = 2.0 / n

    stiff = _assemble(
        conn, n_nodes, np.broadcast_to(_KX_REF + _KY_REF, (len(conn), 4, 4))
    )
    mass = _assemble(conn, n_nodes, np.broadcast_to(h * h * _M_REF, (len(conn), 4, 4)))

    interior = np.array(
        [
            k
            for k in range(n_nodes)
            if np.all(np.abs(nodes[k]) < 1.0 - 1e-12)
        ]
    )
    a = _restrict(stiff, interior)
    mass_i = _restrict(mass, interior)
    gram = sp.csr_matrix(a + mass_i)

    system = AffineSystem(
        matrix_terms=[a],
        rhs_terms=[],
        theta_a=lambda mu: np.array([alpha_t]),
        theta_f=lambda mu: np.array([]),
        gram=gram,
        domain=ParamDomain([-1.0, -1.0], [1.0, 1.0]),
        nodes=nodes[interior],
        meta={
            "n": n,
            "alpha_t": alpha_t,
            "all_nodes": nodes,
            "interior": interior,
            "mass_full": mass,
        },
    )
    return system, gaussian_forcing


def gaussian_poisson_load(system, nodal_values):
    """Consistent load vector from forcing values at all grid nodes."""
    mass = system.meta["mass_full"]
    interior = system.meta["interior"]
    return np.asarray(mass @ np.asarray(nodal_values, dtype=float))[interior]


def solve_gaussian_poisson(system, mu):
    """Full-order solve of the Gaussian-forcing problem (non-affine rhs)."""
    g = gaussian_forcing(system.meta["all_nodes"], mu)
    f = gaussian_poisson_load(system, g)
    a = sp.csc_matrix(system.assemble_matrix(mu))
    u = spla.spsolve(a, f)
    return FomSolution(mu=np.asarray(mu, dtype=float), coefficients=u, output=float(f @ u))


def fom_solve(system, mu):
    """Solve the affine full-order system at one parameter point."""
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    if not system.domain.contains(mu, rtol=1e-12):
        raise ValueError(f"parameter {mu} outside the parameter domain")
    a = sp.csc_matrix(system.assemble_matrix(mu))
    f = system.assemble_rhs(mu)
    u = spla.spsolve(a, f)
    if not np.all(np.isfinite(u)):
        raise np.linalg.LinAlgError("full-order solve produced non-finite values")
    resid = np.linalg.norm(a @ u - f)
    if resid > 1e-10 * max(np.linalg.norm(f), 1.0):
        raise np.linalg.LinAlgError(
            f"full-order solve residual too large: {resid:.3e}"
        )
    s = float(system.assemble_output(mu) @ u)
    return FomSolution(mu=mu, coefficients=u, output=s)


def nu_gaussian(x, mu):
    """Parametrized diffusivity field: shifted Gaussian bump over a floor."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    mu = np.asarray(mu, dtype=float)
    expo = -2.0 * (x[:, 0] - mu[0] - 0.5) ** 2 - 2.0 * (x[:, 1] - mu[1] - 0.5) ** 2
    return np.exp(2.0 * expo) / 100.0 + 0.01


class NonlinearFom:
    """Nonlinear diffusion problem u + div-free operator terms on [0,1]^2.

    Discrete residual R(u; mu) = M u + A(mu) u + C(u) u - f, where A(mu) is a
    stiffness matrix with the non-affine coefficient ``nu_gaussian`` and C(u)
    a stiffness matrix whose per-element coefficient is
    ``nonlin_coeff * mean(u)^2`` (solution dependent). Homogeneous Dirichlet
    on the whole boundary. Exposes the two operator snapshots for matrix
    hyper-reduction.
    """

    def __init__(self, n=12, nonlin_coeff=0.01):
        if n < 3:
            raise ValueError("grid resolution must be at least 3")
        self.n = n
        self.nonlin_coeff = float(nonlin_coeff)
        n_nodes = (n + 1) * (n + 1)
        nodes = _grid_nodes(n)
        conn = _element_connectivity(n)
        h = 1.0 / n
        interior_mask = np.all((nodes > 1e-12) & (nodes < 1.0 - 1e-12), axis=1)
        self.interior = np.flatnonzero(interior_mask)
        self.all_nodes = nodes
        self.nodes = nodes[self.interior]
        self.conn = conn
        self.centers = nodes[conn].mean(axis=1)
        self.domain = ParamDomain([-0.5, -0.5], [0.5, 0.5])

        mass = _assemble(conn, n_nodes, np.broadcast_to(h * h * _M_REF, (len(conn), 4, 4)))
        self.mass = _restrict(mass, self.interior)
        self._k_unit_ref = _KX_REF + _KY_REF  # hx = hy

        # map global node indices to interior dof indices (-1 for boundary)
        self._dof_of_node = -np.ones(n_nodes, dtype=int)
        self._dof_of_node[self.interior] = np.arange(len(self.interior))
        self.dof_count = len(self.interior)
        self.forcing = np.asarray(mass @ np.ones(n_nodes))[self.interior]

    def _coef_stiffness(self, coef_per_element):
        local = coef_per_element[:, None, None] * self._k_unit_ref
        n_nodes = (self.n + 1) * (self.n + 1)
        a = _assemble(self.conn, n_nodes, local)
        return _restrict(a, self.interior)

    def _full_u(self, u):
        full = np.zeros((self.n + 1) * (self.n + 1))
        full[self.interior] = u
        return full

    def diffusion_matrix(self, mu):
        """A(mu): stiffness with the non-affine coefficient at element centers."""
        return self._coef_stiffness(nu_gaussian(self.centers, mu))

    def convection_matrix(self, u):
        """C(u): stiffness with the solution-dependent element coefficient."""
        full = self._full_u(u)
        mean_u = full[self.conn].mean(axis=1)
        return self._coef_stiffness(self.nonlin_coeff * mean_u ** 2)

    def operator_snapshot(self, u, mu):
        return self.diffusion_matrix(mu), self.convection_matrix(u)

    def residual(self, u, mu):
        a, c = self.operator_snapshot(u, mu)
        return self.mass @ u + a @ u + c @ u - self.forcing

    def jacobian(self, u, mu):
        a, c = self.operator_snapshot(u, mu)
        jac = (self.mass + a + c).toarray()
        # derivative of the C(u) coefficients: coef_e = k (mean u_e)^2
        full = self._full_u(u)
        mean_u = full[self.conn].mean(axis=1)
        dcoef = self.nonlin_coeff * 2.0 * mean_u / 4.0  # d coef / d u_node
        ku = np.einsum("ij,ej->ei", self._k_unit_ref, full[self.conn])
        for e, elem in enumerate(self.conn):
            dofs = self._dof_of_node[elem]
            inside = dofs >= 0
            di = dofs[inside]
            jac[np.ix_(di, di)] += np.outer(ku[e][inside], np.full(inside.sum(), dcoef[e]))
        return jac


def nonlinear_solve(fom, mu, guess=None, tol=1e-9, max_iter=50):
    """Newton iteration for the nonlinear diffusion problem."""
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    u = np.zeros(fom.dof_count) if guess is None else np.asarray(guess, dtype=float).copy()
    resid_norm = np.inf
    for _ in range(max_iter):
        r = fom.residual(u, mu)
        resid_norm = float(np.linalg.norm(r))
        if resid_norm <= tol:
            return u
        jac = fom.jacobian(u, mu)
        u = u - np.linalg.solve(jac, r)
    r = fom.residual(u, mu)
    resid_norm = float(np.linalg.norm(r))
    if resid_norm <= tol:
        return u
    raise NewtonError(
        f"Newton did not converge in {max_iter} iterations "
        f"(last residual {resid_norm:.3e})",
        resid_norm,
    )


def export_solution_csv(path, nodes, values):
    """Write node coordinates and values as CSV (x,y,value)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x,y,value\n")
        for (x, y), v in zip(nodes, values):
            fh.write(f"{x:.17g},{y:.17g},{v:.17g}\n")
