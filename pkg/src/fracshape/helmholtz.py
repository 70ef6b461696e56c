"""P1 finite elements for the mixed Dirichlet/Neumann/Robin Helmholtz problem.

Weak form: (grad u, grad v) - omega^2 (u, v) + int_Gamma alpha Tr u Tr v dmu
         = -(f, v) + int_Gamma Tr h Tr v dmu     for v vanishing on the
Dirichlet part.  The Robin coefficient alpha is a per-edge complex constant
with Re(alpha) > 0 (reflection) and Im(alpha) < 0 (absorption); the Robin
boundary term integrates against an arbitrary edge-density measure, not
arclength.  Solves use a sparse direct factorization and are deterministic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from weakref import WeakKeyDictionary

import numpy as np
from scipy.sparse import coo_matrix, csc_matrix
from scipy.sparse.linalg import splu
from scipy.spatial import cKDTree

from . import _kernels
from .geometry import DIRICHLET, NEUMANN, ROBIN, GeometryError
from .measures import BoundaryMeasure
from .meshing import BoundaryQuadrature, HoldallMesh, Mesh, boundary_quadrature


class SolveError(RuntimeError):
    """Singular factorization or invalid problem data."""


# ---------------------------------------------------------------------------
# fields and operators
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ComplexField:
    """Nodal complex coefficients of a P1 function on a mesh."""

    mesh: Mesh
    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.complex128)
        if v.shape != (self.mesh.n_vertices,):
            raise GeometryError("coefficient count must equal vertex count")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __add__(self, other: "ComplexField") -> "ComplexField":
        if other.mesh is not self.mesh:
            raise GeometryError("fields live on different meshes")
        return ComplexField(self.mesh, self.values + other.values)

    def __rmul__(self, scalar) -> "ComplexField":
        return ComplexField(self.mesh, complex(scalar) * self.values)


_op_cache: "WeakKeyDictionary[Mesh, dict]" = WeakKeyDictionary()


def _ops(mesh: Mesh) -> dict:
    ops = _op_cache.get(mesh)
    if ops is not None:
        return ops
    tris = mesh.triangles
    pts = mesh.vertices
    p = pts[tris]
    det = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (
        p[:, 1, 1] - p[:, 0, 1]
    ) * (p[:, 2, 0] - p[:, 0, 0])
    area = 0.5 * det
    grads = np.empty((len(tris), 3, 2))
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        grads[:, i, 0] = (p[:, j, 1] - p[:, k, 1]) / det
        grads[:, i, 1] = (p[:, k, 0] - p[:, j, 0]) / det
    nv = mesh.n_vertices
    rows, cols, kv, mv = [], [], [], []
    for i in range(3):
        for j in range(3):
            rows.append(tris[:, i])
            cols.append(tris[:, j])
            kv.append(area * np.einsum("td,td->t", grads[:, i], grads[:, j]))
            mv.append(area / 12.0 * (2.0 if i == j else 1.0) * np.ones(len(tris)))
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    K = coo_matrix((np.concatenate(kv), (rows, cols)), shape=(nv, nv)).tocsr()
    M = coo_matrix((np.concatenate(mv), (rows, cols)), shape=(nv, nv)).tocsr()
    ops = {"K": K, "M": M, "area": area, "grads": grads}
    _op_cache[mesh] = ops
    return ops


def stiffness_matrix(mesh: Mesh):
    return _ops(mesh)["K"]


def mass_matrix(mesh: Mesh):
    return _ops(mesh)["M"]


def l2_norm(u: ComplexField) -> float:
    return math.sqrt(max(np.vdot(u.values, mass_matrix(u.mesh) @ u.values).real, 0.0))


def h1_seminorm(u: ComplexField) -> float:
    return math.sqrt(max(np.vdot(u.values, stiffness_matrix(u.mesh) @ u.values).real, 0.0))


def w12_norm(u: ComplexField) -> float:
    return math.sqrt(l2_norm(u) ** 2 + h1_seminorm(u) ** 2)


def nodal_values(spec, mesh: Mesh) -> np.ndarray:
    """Materialize a data spec (None | scalar | callable(x, y) | array) as nodal values."""
    nv = mesh.n_vertices
    if spec is None:
        return np.zeros(nv, dtype=np.complex128)
    if callable(spec):
        out = np.asarray(
            spec(mesh.vertices[:, 0], mesh.vertices[:, 1]), dtype=np.complex128
        )
        return np.broadcast_to(out, (nv,)).astype(np.complex128)
    arr = np.asarray(spec, dtype=np.complex128)
    if arr.ndim == 0:
        return np.full(nv, complex(arr))
    if arr.shape != (nv,):
        raise GeometryError("nodal data has wrong length")
    return arr.copy()


# ---------------------------------------------------------------------------
# problem data and assembly
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HelmholtzData:
    """Frequency, Robin coefficient and data specs (mesh-independent).

    alpha may be a single complex constant or a {polygon-edge-id: complex}
    map over the Robin edges; every value needs Re > 0 and Im < 0.
    f, g, h are scalars, callables (x, y) -> complex, or nodal arrays.
    """

    omega: float
    alpha: object
    f: object = None
    g: object = None
    h: object = None

    def __post_init__(self):
        if not self.omega > 0:
            raise GeometryError("omega must be positive")
        for a in self._alpha_values():
            if not (a.real > 0 and a.imag < 0):
                raise GeometryError("alpha needs Re > 0 and Im < 0")

    def _alpha_values(self):
        if isinstance(self.alpha, dict):
            return [complex(v) for v in self.alpha.values()]
        return [complex(self.alpha)]

    def alpha_for_edge(self, parent: int) -> complex:
        if isinstance(self.alpha, dict):
            return complex(self.alpha[parent])
        return complex(self.alpha)

    @property
    def scalar_alpha(self) -> complex:
        vals = self._alpha_values()
        if len(set(vals)) != 1:
            raise GeometryError("operation requires a single alpha constant")
        return vals[0]


@dataclass(frozen=True, eq=False)
class AssembledSystem:
    """Sparse complex symmetric system with Dirichlet data handled by lift."""

    mesh: Mesh
    data: HelmholtzData
    mu: BoundaryMeasure
    matrix: object
    rhs: np.ndarray
    dir_nodes: np.ndarray
    g_nodal: np.ndarray
    f_nodal: np.ndarray
    h_nodal: np.ndarray
    robin_quad: BoundaryQuadrature | None
    robin_plain: object
    robin_alpha: object


def _spec_is_zero(spec) -> bool:
    if spec is None:
        return True
    if callable(spec):
        return False
    arr = np.asarray(spec)
    return bool(np.all(arr == 0))


def assemble(mesh: Mesh, data: HelmholtzData, mu: BoundaryMeasure) -> AssembledSystem:
    """Stiffness - omega^2 mass + alpha-weighted Robin boundary mass, with load."""
    ops = _ops(mesh)
    K, M = ops["K"], ops["M"]
    nv = mesh.n_vertices
    dir_nodes = mesh.dirichlet_nodes()
    robin_ids = mesh.boundary_edges_with_label(ROBIN)
    if not _spec_is_zero(data.g) and len(dir_nodes) == 0:
        raise GeometryError("Dirichlet datum given but mesh has no Dirichlet part")
    if not _spec_is_zero(data.h) and len(robin_ids) == 0:
        raise GeometryError("Robin datum given but mesh has no Robin part")
    if len(robin_ids):
        quad = boundary_quadrature(mesh, mu, ROBIN)
        R = quad.matrix
        pairs = quad.node_pairs
        alphas = np.array(
            [data.alpha_for_edge(int(mesh.boundary_parent[e])) for e in quad.edge_ids]
        )
        i = np.repeat(pairs, 2, axis=1).ravel()
        j = np.tile(pairs, (1, 2)).ravel()
        v = (alphas[:, None, None] * quad.local).reshape(len(pairs), 4).ravel()
        R_alpha = coo_matrix((v, (i, j)), shape=(nv, nv)).tocsr()
    else:
        quad = None
        R = coo_matrix((nv, nv)).tocsr()
        R_alpha = R.astype(np.complex128)
    f_nodal = nodal_values(data.f, mesh)
    g_nodal = nodal_values(data.g, mesh)
    h_nodal = nodal_values(data.h, mesh)
    A = (K - data.omega**2 * M).astype(np.complex128) + R_alpha
    b = -(M @ f_nodal) + R @ h_nodal
    return AssembledSystem(
        mesh=mesh,
        data=data,
        mu=mu,
        matrix=A.tocsr(),
        rhs=b,
        dir_nodes=dir_nodes,
        g_nodal=g_nodal,
        f_nodal=f_nodal,
        h_nodal=h_nodal,
        robin_quad=quad,
        robin_plain=R,
        robin_alpha=R_alpha,
    )


@dataclass(frozen=True, eq=False)
class SolveReport:
    """Solution plus the diagnostics asserted by the acceptance suite."""

    solution: ComplexField
    linear_residual: float
    energy_identity_defect: float
    defect_real: float
    defect_imag: float
    apriori_ratio: float
    acoustic_energy: float
    gradient_energy: float
    robin_trace_energy: float
    method: str


def _reduced_solve(A, b, dir_nodes, g_nodal, nv):
    u = np.array(g_nodal, dtype=np.complex128)
    mask = np.zeros(nv, dtype=bool)
    mask[dir_nodes] = True
    u[~mask] = 0.0
    free = np.nonzero(~mask)[0]
    if len(free) == 0:
        return u, 0.0
    A_ff = A[free][:, free]
    rhs = b[free].astype(np.complex128)
    if len(dir_nodes):
        rhs = rhs - A[free][:, dir_nodes] @ u[dir_nodes]
    try:
        lu = splu(csc_matrix(A_ff))
        x = lu.solve(rhs)
    except RuntimeError as exc:
        raise SolveError("discrete resonance or invalid data") from exc
    if not np.all(np.isfinite(x)):
        raise SolveError("discrete resonance or invalid data")
    u[free] = x
    denom = np.linalg.norm(rhs)
    resid = float(np.linalg.norm(A_ff @ x - rhs) / denom) if denom > 0 else float(
        np.linalg.norm(A_ff @ x)
    )
    return u, resid


def _arclength_l2_on_label(mesh: Mesh, values: np.ndarray, label: str) -> float:
    """L2 norm of nodal values over labeled edges against arclength."""
    ids = mesh.boundary_edges_with_label(label)
    total = 0.0
    for e in ids:
        i, j = mesh.boundary_edges[e]
        ln = float(np.hypot(*(mesh.vertices[j] - mesh.vertices[i])))
        vi, vj = values[i], values[j]
        total += ln / 6.0 * (
            2 * abs(vi) ** 2 + 2 * abs(vj) ** 2 + 2 * (vi * np.conj(vj)).real
        )
    return math.sqrt(max(total, 0.0))


def solve_helmholtz(
    mesh: Mesh, data: HelmholtzData, mu: BoundaryMeasure, method: str = "lift"
) -> SolveReport:
    """Direct sparse solve of the assembled system with full diagnostics.

    method="lift" eliminates Dirichlet nodes by row/column reduction with
    nodal interpolation of g; method="two_step" first solves the auxiliary
    Re(alpha)-Robin problem for the harmonic lift g-hat and then the
    shifted problem for u - g-hat (cross-check mode, scalar alpha only).
    """
    if method == "two_step":
        return _solve_two_step(mesh, data, mu)
    sysm = assemble(mesh, data, mu)
    nv = mesh.n_vertices
    u, resid = _reduced_solve(sysm.matrix, sysm.rhs, sysm.dir_nodes, sysm.g_nodal, nv)
    return _report(sysm, u, resid, "lift")


def _solve_two_step(mesh: Mesh, data: HelmholtzData, mu: BoundaryMeasure) -> SolveReport:
    alpha = data.scalar_alpha
    ops = _ops(mesh)
    K, M = ops["K"], ops["M"]
    nv = mesh.n_vertices
    quad = boundary_quadrature(mesh, mu, ROBIN)
    R = quad.matrix
    # harmonic lift: Laplace with Re(alpha) Robin wall and the Dirichlet datum
    A_hat = (K + alpha.real * R).astype(np.complex128)
    g_nodal = nodal_values(data.g, mesh)
    ghat, _ = _reduced_solve(A_hat.tocsr(), np.zeros(nv, dtype=np.complex128), mesh.dirichlet_nodes(), g_nodal, nv)
    # shifted data: f - omega^2 ghat and h - i Im(alpha) ghat, zero Dirichlet part
    f_shift = nodal_values(data.f, mesh) - data.omega**2 * ghat
    h_shift = nodal_values(data.h, mesh) - 1j * alpha.imag * ghat
    shifted = HelmholtzData(omega=data.omega, alpha=data.alpha, f=f_shift, g=None, h=h_shift)
    sys_w = assemble(mesh, shifted, mu)
    w, resid = _reduced_solve(sys_w.matrix, sys_w.rhs, sys_w.dir_nodes, sys_w.g_nodal, nv)
    u = w + ghat
    sysm = assemble(mesh, data, mu)
    return _report(sysm, u, resid, "two_step")


def _report(sysm: AssembledSystem, u: np.ndarray, resid: float, method: str) -> SolveReport:
    mesh = sysm.mesh
    ops = _ops(mesh)
    K, M = ops["K"], ops["M"]
    data = sysm.data
    # Galerkin identity with the admissible test function: u zeroed on the
    # Dirichlet part (u itself is not in the test space when g != 0)
    v = u.copy()
    v[sysm.dir_nodes] = 0.0
    t1 = np.vdot(v, K @ u)
    t2 = -data.omega**2 * np.vdot(v, M @ u)
    t3 = np.vdot(v, sysm.robin_alpha @ u)
    r1 = -np.vdot(v, M @ sysm.f_nodal)
    r2 = np.vdot(v, sysm.robin_plain @ sysm.h_nodal)
    gap = t1 + t2 + t3 - r1 - r2
    scale_re = max(abs(t1.real), abs(t2.real), abs(t3.real), abs(r1.real), abs(r2.real))
    scale_im = max(abs(t1.imag), abs(t2.imag), abs(t3.imag), abs(r1.imag), abs(r2.imag))
    defect_re = abs(gap.real) / scale_re if scale_re > 0 else 0.0
    defect_im = abs(gap.imag) / scale_im if scale_im > 0 else 0.0
    acoustic = max(np.vdot(u, M @ u).real, 0.0)
    gradient = max(np.vdot(u, K @ u).real, 0.0)
    robin_tr = max(np.vdot(u, sysm.robin_plain @ u).real, 0.0)
    unorm = math.sqrt(acoustic + gradient)
    f_norm = math.sqrt(max(np.vdot(sysm.f_nodal, M @ sysm.f_nodal).real, 0.0))
    g_norm = (
        _arclength_l2_on_label(mesh, sysm.g_nodal, DIRICHLET)
        if len(sysm.dir_nodes)
        else 0.0
    )
    h_vec = sysm.h_nodal
    h_norm = math.sqrt(
        max(np.vdot(h_vec, M @ h_vec).real + np.vdot(h_vec, K @ h_vec).real, 0.0)
    )
    denom = f_norm + g_norm + h_norm
    ratio = unorm / denom if denom > 0 else 0.0
    return SolveReport(
        solution=ComplexField(mesh, u),
        linear_residual=resid,
        energy_identity_defect=max(defect_re, defect_im),
        defect_real=defect_re,
        defect_imag=defect_im,
        apriori_ratio=ratio,
        acoustic_energy=float(acoustic),
        gradient_energy=float(gradient),
        robin_trace_energy=float(robin_tr),
        method=method,
    )


# ---------------------------------------------------------------------------
# traces
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BoundaryTrace:
    """Restriction of a P1 field to labeled boundary edges with its L2(mu) norm."""

    mesh: Mesh
    label: str
    node_ids: np.ndarray
    values: np.ndarray
    norm: float

    def value_near(self, point) -> complex:
        p = np.asarray(point, dtype=np.float64)
        d = np.hypot(*(self.mesh.vertices[self.node_ids] - p).T)
        return complex(self.values[int(np.argmin(d))])


def trace(u: ComplexField, label: str, mu: BoundaryMeasure) -> BoundaryTrace:
    """Nodal restriction to the labeled part (P1 fields are continuous,
    so the Lebesgue-point limit is plain evaluation); exact L2(mu) norm."""
    quad = boundary_quadrature(u.mesh, mu, label)
    nodes = np.unique(quad.node_pairs)
    return BoundaryTrace(
        mesh=u.mesh,
        label=label,
        node_ids=nodes,
        values=u.values[nodes],
        norm=quad.norm(u.values),
    )


def trace_inequality_ratio(
    samples: int, mesh: Mesh, label: str, mu: BoundaryMeasure, seed: int = 0
) -> float:
    """Max of ||Tr u||_L2(mu) / ||u||_W12 over random unit-Gaussian P1 fields."""
    quad = boundary_quadrature(mesh, mu, label)
    K, M = stiffness_matrix(mesh), mass_matrix(mesh)
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(samples):
        u = rng.standard_normal(mesh.n_vertices) + 1j * rng.standard_normal(mesh.n_vertices)
        den = math.sqrt(np.vdot(u, M @ u).real + np.vdot(u, K @ u).real)
        num = quad.norm(u)
        if den > 0:
            best = max(best, num / den)
    return best


# ---------------------------------------------------------------------------
# trace-space (Besov) norm on the carrier
# ---------------------------------------------------------------------------


def besov_quadrature(mu: BoundaryMeasure, h_quad: float):
    """Midpoint quadrature on the carrier at pitch <= h_quad: (points, weights)."""
    pts, ws = [], []
    for part, dens in zip(mu.parts, mu.densities):
        p = part.points
        for k in range(part.n_segments):
            a, b = p[k], p[k + 1]
            ln = float(np.hypot(*(b - a)))
            n = max(1, int(math.ceil(ln / h_quad)))
            t = (np.arange(n) + 0.5) / n
            pts.append(a[None, :] + t[:, None] * (b - a)[None, :])
            ws.append(np.full(n, dens[k] * ln / n))
    return np.vstack(pts), np.concatenate(ws)


def besov_norm(
    phi,
    mu: BoundaryMeasure,
    beta: float,
    s: float,
    d: float,
    h_quad: float | None = None,
) -> float:
    """Discrete B^{2,2}_beta(K, mu) norm: L2 part plus the dyadic double sum
    weighted by exact ball masses (ambient dimension 2).

    beta must lie in the admissible window ((2-d)/2, 1+(2-s)/2) for the
    supplied measure exponents.
    """
    lo = (2.0 - d) / 2.0
    hi = 1.0 + (2.0 - s) / 2.0
    if not (lo < beta < hi):
        raise GeometryError(
            "beta=%g outside the admissible window (%g, %g)" % (beta, lo, hi)
        )
    if h_quad is None:
        h_quad = mu.total_length / 200.0
    pts, w = besov_quadrature(mu, h_quad)
    if callable(phi):
        f = np.asarray(phi(pts[:, 0], pts[:, 1]), dtype=np.complex128)
        f = np.broadcast_to(f, (len(pts),)).astype(np.complex128)
    else:
        f = np.asarray(phi, dtype=np.complex128)
        if f.shape != (len(pts),):
            raise GeometryError("phi array must match the quadrature points")
    jmax = int(math.ceil(math.log2(1.0 / h_quad))) if h_quad < 1.0 else 0
    radii = 2.0 ** (-np.arange(jmax + 1, dtype=np.float64))
    masses = mu.ball_masses(pts, radii)
    double = _kernels.besov_pair_sum(
        pts[:, 0], pts[:, 1], w, f.real, f.imag, masses, beta
    )
    l2 = math.sqrt(float(np.sum(w * np.abs(f) ** 2)))
    return l2 + math.sqrt(max(double, 0.0))


# ---------------------------------------------------------------------------
# extensions
# ---------------------------------------------------------------------------


def harmonic_extension(
    mesh: Mesh, nodes, values, mode: str = "dirichlet_energy"
) -> ComplexField:
    """Energy-minimizing extension of boundary values into the mesh.

    dirichlet_energy minimizes int |grad v|^2; bessel minimizes
    int (|v|^2 + |grad v|^2), the discrete (1 - Lap)-harmonic extension.
    Linear in the data: one factorization serves all right-hand sides.
    """
    nodes = np.asarray(nodes, dtype=np.int64)
    if len(nodes) == 0:
        raise GeometryError("empty boundary node set")
    vals = np.asarray(values, dtype=np.complex128)
    if vals.shape != nodes.shape:
        raise GeometryError("one value per boundary node")
    if mode == "dirichlet_energy":
        A = stiffness_matrix(mesh)
    elif mode == "bessel":
        A = stiffness_matrix(mesh) + mass_matrix(mesh)
    else:
        raise GeometryError("unknown extension mode %r" % mode)
    nv = mesh.n_vertices
    u = np.zeros(nv, dtype=np.complex128)
    u[nodes] = vals
    mask = np.zeros(nv, dtype=bool)
    mask[nodes] = True
    free = np.nonzero(~mask)[0]
    if len(free):
        A_ff = csc_matrix(A[free][:, free], dtype=np.float64)
        rhs = -(A[free][:, nodes] @ vals)
        lu = splu(A_ff)
        u[free] = lu.solve(rhs.real.copy()) + 1j * lu.solve(rhs.imag.copy())
    return ComplexField(mesh, u)


def extension_to_holdall(
    u: ComplexField, hm: HoldallMesh, mode: str = "dirichlet_energy"
) -> ComplexField:
    """Keep u on Omega; fill the hold-all complement with the harmonic
    extension of the boundary trace (conforming across the shared chain)."""
    om = hm.omega_mesh
    if u.mesh is not om and not (
        u.mesh.n_vertices == om.n_vertices
        and np.array_equal(u.mesh.vertices, om.vertices)
        and np.array_equal(u.mesh.triangles, om.triangles)
    ):
        raise GeometryError("incompatible meshes")
    fixed = hm.omega_to_d
    return harmonic_extension(hm.mesh, fixed, u.values, mode=mode)


# ---------------------------------------------------------------------------
# Poincare constant and normal derivative
# ---------------------------------------------------------------------------


def poincare_constant(
    mesh: Mesh, dirichlet_label: str = DIRICHLET, tol: float = 1e-8, max_iter: int = 1000
) -> float:
    """C_P = 1/lambda_min of (stiffness, mass) on the Dirichlet-constrained space,
    by inverse iteration."""
    dir_nodes = mesh.boundary_nodes(dirichlet_label)
    if len(dir_nodes) == 0:
        raise GeometryError("no Dirichlet data: Poincare inequality fails")
    nv = mesh.n_vertices
    mask = np.zeros(nv, dtype=bool)
    mask[dir_nodes] = True
    free = np.nonzero(~mask)[0]
    K = csc_matrix(stiffness_matrix(mesh)[free][:, free])
    M = mass_matrix(mesh)[free][:, free]
    lu = splu(K)
    x = np.ones(len(free))
    lam_old = np.inf
    for _ in range(max_iter):
        y = M @ x
        x = lu.solve(y)
        x /= math.sqrt(x @ (M @ x))
        lam = (x @ (K @ x)) / (x @ (M @ x))
        if abs(lam - lam_old) <= tol * abs(lam):
            break
        lam_old = lam
    return 1.0 / lam


def normal_derivative_pairing(u: ComplexField, lap_u, v: ComplexField) -> complex:
    """Generalized normal derivative pairing: int v-bar lap(u) + int grad v-bar . grad u.

    lap_u is the Laplacian of u supplied as a nodal field (exact for
    manufactured u).  Pairs against Tr v when v lies in the test space.
    """
    mesh = u.mesh
    lap = lap_u.values if isinstance(lap_u, ComplexField) else nodal_values(lap_u, mesh)
    return complex(
        np.vdot(v.values, mass_matrix(mesh) @ lap)
        + np.vdot(v.values, stiffness_matrix(mesh) @ u.values)
    )


# ---------------------------------------------------------------------------
# cross-mesh sampling and errors
# ---------------------------------------------------------------------------


def sample_field(u: ComplexField, points) -> np.ndarray:
    """Evaluate a P1 field at arbitrary points (point location + barycentric).

    Points coinciding with mesh nodes return the nodal value exactly.
    """
    mesh = u.mesh
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    out = np.empty(len(pts), dtype=np.complex128)
    done = np.zeros(len(pts), dtype=bool)
    scale = max(mesh.domain.outer.diameter, 1e-300)
    ntree = cKDTree(mesh.vertices)
    dn, ni = ntree.query(pts)
    snap = dn <= 1e-13 * scale
    out[snap] = u.values[ni[snap]]
    done |= snap
    if not np.all(done):
        p = mesh.vertices[mesh.triangles]
        cent = p.mean(axis=1)
        ctree = cKDTree(cent)
        vals = u.values[mesh.triangles]
        for k in (8, 64, 256):
            todo = np.nonzero(~done)[0]
            if len(todo) == 0:
                break
            kk = min(k, mesh.n_triangles)
            _, cand = ctree.query(pts[todo], k=kk)
            cand = np.atleast_2d(cand)
            for c in range(kk):
                sub = np.nonzero(~done[todo])[0]
                if len(sub) == 0:
                    break
                idx = todo[sub]
                t = cand[sub, c]
                a, b, cc = p[t, 0], p[t, 1], p[t, 2]
                det = (b[:, 0] - a[:, 0]) * (cc[:, 1] - a[:, 1]) - (
                    b[:, 1] - a[:, 1]
                ) * (cc[:, 0] - a[:, 0])
                w1 = (
                    (pts[idx, 0] - a[:, 0]) * (cc[:, 1] - a[:, 1])
                    - (pts[idx, 1] - a[:, 1]) * (cc[:, 0] - a[:, 0])
                ) / det
                w2 = (
                    (b[:, 0] - a[:, 0]) * (pts[idx, 1] - a[:, 1])
                    - (b[:, 1] - a[:, 1]) * (pts[idx, 0] - a[:, 0])
                ) / det
                w0 = 1.0 - w1 - w2
                ok = (w0 >= -1e-10) & (w1 >= -1e-10) & (w2 >= -1e-10)
                if np.any(ok):
                    sel = idx[ok]
                    out[sel] = (
                        w0[ok] * vals[t[ok], 0]
                        + w1[ok] * vals[t[ok], 1]
                        + w2[ok] * vals[t[ok], 2]
                    )
                    done[sel] = True
        if not np.all(done):
            rest = np.nonzero(~done)[0]
            near = dn[rest] <= 1e-9 * scale
            out[rest[near]] = u.values[ni[rest[near]]]
            if not np.all(near):
                raise GeometryError("point outside mesh")
    return out


def restrict_field(u: ComplexField, target: Mesh) -> ComplexField:
    """Nodal interpolation of a field onto another mesh's vertices."""
    return ComplexField(target, sample_field(u, target.vertices))


def l2_error_against(u: ComplexField, exact) -> tuple:
    """(absolute, relative) L2 error against a callable, by edge-midpoint quadrature
    (degree-2 exact, and P1 fields are exact at edge midpoints)."""
    mesh = u.mesh
    p = mesh.vertices[mesh.triangles]
    vals = u.values[mesh.triangles]
    area = _ops(mesh)["area"]
    err2 = 0.0
    ref2 = 0.0
    for k in range(3):
        i, j = k, (k + 1) % 3
        mid = 0.5 * (p[:, i] + p[:, j])
        u_mid = 0.5 * (vals[:, i] + vals[:, j])
        ex = np.asarray(exact(mid[:, 0], mid[:, 1]), dtype=np.complex128)
        err2 += float(np.sum(area / 3.0 * np.abs(u_mid - ex) ** 2))
        ref2 += float(np.sum(area / 3.0 * np.abs(ex) ** 2))
    abs_err = math.sqrt(max(err2, 0.0))
    rel = abs_err / math.sqrt(ref2) if ref2 > 0 else abs_err
    return abs_err, rel
