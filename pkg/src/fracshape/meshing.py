"""Conforming triangulations of labeled polygonal domains.

Constrained Delaunay with Ruppert-style refinement, built by repeated
re-triangulation (scipy Delaunay) with midpoint recovery of missing
constraint edges and circumcenter insertion for low-quality triangles.
Boundary sub-edges inherit the label of their parent polygon edge exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.sparse import coo_matrix
from scipy.spatial import Delaunay, cKDTree

from .geometry import (
    DIRICHLET,
    GeometryError,
    Polygon,
    PolygonalDomain,
    polygon_contains,
)
from .measures import BoundaryMeasure

_NEU_ALL = "neu"


@dataclass(frozen=True, eq=False)
class Mesh:
    """Triangulation with labeled boundary edges.

    ``boundary_edges`` are oriented along the polygon orientation and sorted
    along each parent edge; ``boundary_parent[i]`` is the polygon edge the
    i-th sub-edge lies on (labels inherit from it).
    """

    domain: PolygonalDomain
    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_parent: np.ndarray
    h: float

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=np.float64)
        t = np.ascontiguousarray(self.triangles, dtype=np.int32)
        be = np.ascontiguousarray(self.boundary_edges, dtype=np.int32)
        bp = np.ascontiguousarray(self.boundary_parent, dtype=np.int32)
        for a in (v, t, be, bp):
            a.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        object.__setattr__(self, "boundary_edges", be)
        object.__setattr__(self, "boundary_parent", bp)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @cached_property
    def areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        return 0.5 * (
            (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
            - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0])
        )

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        out = np.empty((self.n_triangles, 3))
        for k in range(3):
            d = p[:, (k + 1) % 3] - p[:, k]
            out[:, k] = np.hypot(d[:, 0], d[:, 1])
        return out

    @cached_property
    def min_angle(self) -> float:
        e = self.edge_lengths
        angles = []
        for k in range(3):
            a = e[:, (k + 1) % 3]
            b = e[:, (k + 2) % 3]
            c = e[:, k]
            cosang = np.clip((a * a + b * b - c * c) / (2 * a * b), -1.0, 1.0)
            angles.append(np.degrees(np.arccos(cosang)))
        return float(np.min(np.stack(angles)))

    @cached_property
    def boundary_labels(self) -> tuple:
        return tuple(self.domain.edge_labels[p] for p in self.boundary_parent)

    def boundary_edges_with_label(self, label: str) -> np.ndarray:
        mask = np.asarray([lab == label for lab in self.boundary_labels])
        return np.nonzero(mask)[0]

    def boundary_nodes(self, label: str | None = None) -> np.ndarray:
        if label is None:
            return np.unique(self.boundary_edges)
        ids = self.boundary_edges_with_label(label)
        return np.unique(self.boundary_edges[ids])

    def dirichlet_nodes(self) -> np.ndarray:
        return self.boundary_nodes(DIRICHLET)

    def boundary_chain(self) -> np.ndarray:
        """Boundary node indices in traversal order around the polygon."""
        return self.boundary_edges[:, 0]

    def validate(self) -> None:
        poly = self.domain.outer
        areas = self.areas
        if np.any(areas <= 0):
            raise GeometryError("mesh has non-positively-oriented triangles")
        if np.any(areas <= 1e-14 * poly.area):
            raise GeometryError("mesh has a degenerate triangle")
        total = math.fsum(areas.tolist())
        if abs(total - poly.area) > 1e-12 * poly.area:
            raise GeometryError("triangle areas do not partition the polygon")
        # the topological boundary must coincide with the declared labeled edges
        tri_edges = np.vstack(
            [self.triangles[:, [0, 1]], self.triangles[:, [1, 2]], self.triangles[:, [2, 0]]]
        )
        key = np.sort(tri_edges, axis=1)
        hashes = key[:, 0].astype(np.int64) * self.n_vertices + key[:, 1]
        uniq, counts = np.unique(hashes, return_counts=True)
        topo = set(uniq[counts == 1].tolist())
        bkey = np.sort(self.boundary_edges, axis=1)
        declared = set(
            (bkey[:, 0].astype(np.int64) * self.n_vertices + bkey[:, 1]).tolist()
        )
        if topo != declared:
            raise GeometryError("declared boundary edges do not match the mesh boundary")
        # each sub-edge must lie on its parent polygon edge
        sx, sy, ex, ey = poly.edge_arrays()
        scale = max(poly.diameter, 1e-300)
        for (i, j), par in zip(self.boundary_edges, self.boundary_parent):
            for node in (i, j):
                p = self.vertices[node]
                d = _point_segment_distance(
                    p[0], p[1], sx[par], sy[par], ex[par], ey[par]
                )
                if d > 1e-9 * scale:
                    raise GeometryError("boundary edge strays from its parent polygon edge")


def _point_segment_distance(px, py, ax, ay, bx, by):
    dx, dy = bx - ax, by - ay
    l2 = dx * dx + dy * dy
    t = 0.0 if l2 == 0 else min(1.0, max(0.0, ((px - ax) * dx + (py - ay) * dy) / l2))
    return math.hypot(px - ax - t * dx, py - ay - t * dy)


# ---------------------------------------------------------------------------
# refinement engine
# ---------------------------------------------------------------------------


class _Constraint:
    __slots__ = ("a", "b", "parent", "protected")

    def __init__(self, a, b, parent, protected):
        self.a = a
        self.b = b
        self.parent = parent
        self.protected = protected


class _Mesher:
    def __init__(self, points, constraints, inside_fn, h, min_angle, scale):
        self.pts = [tuple(p) for p in points]
        self.cons = constraints
        self.inside_fn = inside_fn
        self.h = h
        self.min_target = min_angle
        self.scale = scale
        self.quality_ok = False

    # -- helpers ------------------------------------------------------------

    def _points_array(self):
        return np.asarray(self.pts, dtype=np.float64)

    def _edge_hashes(self, tri, n):
        e = np.vstack([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
        e.sort(axis=1)
        return np.unique(e[:, 0].astype(np.int64) * n + e[:, 1])

    def _con_arrays(self):
        pa = self._points_array()
        ia = np.array([c.a for c in self.cons], dtype=np.int64)
        ib = np.array([c.b for c in self.cons], dtype=np.int64)
        return pa[ia], pa[ib]

    def _split(self, idx):
        c = self.cons[idx]
        a = np.asarray(self.pts[c.a])
        b = np.asarray(self.pts[c.b])
        mid = tuple(0.5 * (a + b))
        m = len(self.pts)
        self.pts.append(mid)
        self.cons[idx : idx + 1] = [
            _Constraint(c.a, m, c.parent, c.protected),
            _Constraint(m, c.b, c.parent, c.protected),
        ]

    # -- main loop ----------------------------------------------------------

    def run(self, max_rounds=80, enforce_quality=True):
        inside_tri = None
        tri = None
        for _ in range(max_rounds):
            pa = self._points_array()
            tri = Delaunay(pa)
            n = len(pa)
            edge_hashes = self._edge_hashes(tri.simplices.astype(np.int64), n)
            con_key = np.array(
                [[min(c.a, c.b), max(c.a, c.b)] for c in self.cons], dtype=np.int64
            )
            con_hash = con_key[:, 0] * n + con_key[:, 1]
            present = np.isin(con_hash, edge_hashes)
            if not np.all(present):
                for idx in np.nonzero(~present)[0][::-1]:
                    if self.cons[idx].protected:
                        raise GeometryError("protected constraint edge lost")
                    self._split(int(idx))
                continue
            simp = tri.simplices
            cent = pa[simp].mean(axis=1)
            inside = self.inside_fn(cent)
            inside_tri = simp[inside]
            bad = self._bad_triangles(pa, inside_tri)
            if len(bad) == 0:
                self.quality_ok = True
                break
            if not self._refine_round(pa, inside_tri[bad], n):
                break
        if inside_tri is None or tri is None:
            pa = self._points_array()
            tri = Delaunay(pa)
            simp = tri.simplices
            cent = pa[simp].mean(axis=1)
            inside_tri = simp[self.inside_fn(cent)]
            self.quality_ok = len(self._bad_triangles(pa, inside_tri)) == 0
        if enforce_quality and not self.quality_ok:
            raise GeometryError(
                "quality bound failed: could not reach the angle/size targets; shrink h"
            )
        return self._points_array(), inside_tri

    def _bad_triangles(self, pa, tris):
        if len(tris) == 0:
            return np.array([], dtype=np.int64)
        p = pa[tris]
        e = np.empty((len(tris), 3))
        for k in range(3):
            d = p[:, (k + 1) % 3] - p[:, k]
            e[:, k] = np.hypot(d[:, 0], d[:, 1])
        longest = e.max(axis=1)
        min_cos = -1.0
        worst = np.full(len(tris), np.inf)
        for k in range(3):
            a = e[:, (k + 1) % 3]
            b = e[:, (k + 2) % 3]
            c = e[:, k]
            cosang = np.clip((a * a + b * b - c * c) / (2 * a * b), -1.0, 1.0)
            ang = np.degrees(np.arccos(cosang))
            worst = np.minimum(worst, ang)
        bad = (worst < self.min_target - 1e-9) | (longest > 2.0 * self.h * (1 + 1e-12))
        return np.nonzero(bad)[0]

    def _refine_round(self, pa, bad_tris, n) -> bool:
        ccenters, radii = _circumcenters(pa[bad_tris])
        order = np.argsort(-radii, kind="stable")
        ccenters = ccenters[order]
        radii = radii[order]
        bad_tris = bad_tris[order]
        finite = np.isfinite(ccenters).all(axis=1)
        ca, cb = self._con_arrays()
        cmid = 0.5 * (ca + cb)
        crad = 0.5 * np.hypot(*(cb - ca).T)
        protected = np.array([c.protected for c in self.cons])
        ctree = cKDTree(cmid)
        # nearest constraint midpoint decides encroachment candidates cheaply;
        # a point inside a diametral circle is within crad of that midpoint
        rmax = float(crad.max()) if len(crad) else 0.0
        tree = cKDTree(pa)
        to_split: set[int] = set()
        min_len = 1e-3 * self.h
        did = False
        inside_flags = np.zeros(len(ccenters), dtype=bool)
        if np.any(finite):
            inside_flags[finite] = self.inside_fn(ccenters[finite])
        near_existing = np.full(len(ccenters), np.inf)
        if len(ccenters):
            near_existing[finite] = tree.query(ccenters[finite])[0]
        accepted: list[np.ndarray] = []
        accepted_r: list[float] = []
        acc_tree = None
        acc_base = 0
        con_lookup = None
        for t in range(len(ccenters)):
            c = ccenters[t]
            r = radii[t]
            if not finite[t]:
                continue
            enc_idx = ctree.query_ball_point(c, rmax) if rmax > 0 else []
            enc_idx = [i for i in enc_idx if np.hypot(*(cmid[i] - c)) < crad[i] * (1 - 1e-12)]
            if enc_idx:
                splittable = [
                    i for i in enc_idx if not protected[i] and 2 * crad[i] > min_len
                ]
                if splittable:
                    to_split.update(int(i) for i in splittable)
                    did = True
                continue
            if not inside_flags[t]:
                if con_lookup is None:
                    con_lookup = {
                        (min(cc.a, cc.b), max(cc.a, cc.b)): i
                        for i, cc in enumerate(self.cons)
                    }
                did |= self._handle_outside_center(bad_tris[t], pa, con_lookup, to_split)
                continue
            if near_existing[t] < 1e-9 * self.scale:
                continue
            ok = True
            # spatial dedupe against accepted candidates (chunked KD-trees)
            if acc_tree is not None:
                near = acc_tree.query_ball_point(c, 0.5 * r)
                for qi in near:
                    if np.hypot(*(accepted[qi] - c)) < 0.5 * min(r, accepted_r[qi]):
                        ok = False
                        break
            if ok:
                for qi in range(acc_base, len(accepted)):
                    if np.hypot(*(accepted[qi] - c)) < 0.5 * min(r, accepted_r[qi]):
                        ok = False
                        break
            if ok:
                accepted.append(c)
                accepted_r.append(r)
                did = True
                if len(accepted) - acc_base >= 128:
                    acc_tree = cKDTree(np.asarray(accepted))
                    acc_base = len(accepted)
        for idx in sorted(to_split, reverse=True):
            self._split(idx)
        for c in accepted:
            self.pts.append(tuple(c))
        return did

    def _handle_outside_center(self, tri_nodes, pa, con_lookup, to_split) -> bool:
        # concave case: the circumcenter escaped; split a constrained edge of
        # the triangle, else insert the midpoint of its longest free edge
        edges = [(tri_nodes[k], tri_nodes[(k + 1) % 3]) for k in range(3)]
        best = None
        best_len = -1.0
        free_edge = None
        free_len = -1.0
        for a, b in edges:
            ln = float(np.hypot(*(pa[a] - pa[b])))
            key = (min(a, b), max(a, b))
            if key in con_lookup:
                idx = con_lookup[key]
                if not self.cons[idx].protected and ln > best_len and ln > 2e-3 * self.h:
                    best, best_len = idx, ln
            elif ln > free_len:
                free_edge, free_len = (a, b), ln
        if best is not None:
            to_split.add(best)
            return True
        if free_edge is not None:
            mid = 0.5 * (pa[free_edge[0]] + pa[free_edge[1]])
            if bool(self.inside_fn(mid[None, :])[0]):
                self.pts.append(tuple(mid))
                return True
        return False


def _circumcenters(p):
    ax, ay = p[:, 0, 0], p[:, 0, 1]
    bx, by = p[:, 1, 0], p[:, 1, 1]
    cx, cy = p[:, 2, 0], p[:, 2, 1]
    d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    with np.errstate(divide="ignore", invalid="ignore"):
        ux = (
            (ax * ax + ay * ay) * (by - cy)
            + (bx * bx + by * by) * (cy - ay)
            + (cx * cx + cy * cy) * (ay - by)
        ) / d
        uy = (
            (ax * ax + ay * ay) * (cx - bx)
            + (bx * bx + by * by) * (ax - cx)
            + (cx * cx + cy * cy) * (bx - ax)
        ) / d
    centers = np.column_stack([ux, uy])
    radii = np.hypot(ux - ax, uy - ay)
    return centers, radii


def _split_chain(a, b, h):
    """Points subdividing [a, b] into pieces of length <= h (b excluded)."""
    ln = float(np.hypot(*(b - a)))
    n = max(1, int(math.ceil(ln / h * (1 - 1e-12))))
    ts = np.arange(n) / n
    return a[None, :] + ts[:, None] * (b - a)[None, :]


def _hex_seeds(bbox, h, keep_fn):
    x0, y0, x1, y1 = bbox
    pitch = 0.95 * h
    dy = pitch * math.sqrt(3.0) / 2.0
    rows = int(math.ceil((y1 - y0) / dy)) + 1
    pts = []
    for j in range(rows):
        y = y0 + j * dy
        off = 0.5 * pitch if j % 2 else 0.0
        xs = np.arange(x0 + off, x1 + pitch, pitch)
        pts.append(np.column_stack([xs, np.full(len(xs), y)]))
    pts = np.vstack(pts)
    keep = keep_fn(pts)
    return pts[keep]


def triangulate(dom: PolygonalDomain, h: float, *, min_angle: float = 20.0, max_rounds: int = 80) -> Mesh:
    """Conforming triangulation with sub-edges <= h, diameters <= 2h, angles >= 20 deg.

    Polygon edges shorter than h are kept unsplit.  Raises when the quality
    targets are unreachable at this h.
    """
    if not h > 0:
        raise GeometryError("h must be positive")
    poly = dom.outer
    verts = poly.vertices
    ne = len(verts)
    points = [tuple(v) for v in verts]
    cons = []
    for e in range(ne):
        a = verts[e]
        b = verts[(e + 1) % ne]
        chain = _split_chain(a, b, h)
        ids = [e]
        for p in chain[1:]:
            ids.append(len(points))
            points.append(tuple(p))
        ids.append((e + 1) % ne)
        for i in range(len(ids) - 1):
            cons.append(_Constraint(ids[i], ids[i + 1], e, False))

    def inside(pts):
        return poly.contains_points(pts)

    bpts = np.asarray(points)

    def keep(pts):
        ins = poly.contains_points(pts)
        out = ins.copy()
        if np.any(ins):
            d = poly.distance_to_boundary(pts[ins])
            out[ins] = d >= 0.7 * h
        return out

    seeds = _hex_seeds(poly.bbox, h, keep)
    for s in seeds:
        points.append(tuple(s))

    mesher = _Mesher(points, cons, inside, h, min_angle, poly.diameter)
    pa, tris = mesher.run(max_rounds=max_rounds, enforce_quality=True)
    return _assemble(dom, pa, tris, mesher.cons)


def _assemble(dom, pa, tris, cons, parent_filter=None) -> Mesh:
    # orient CCW
    p = pa[tris]
    sgn = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (
        p[:, 1, 1] - p[:, 0, 1]
    ) * (p[:, 2, 0] - p[:, 0, 0])
    tris = tris.copy()
    flip = sgn < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    # compact to used vertices
    used = np.unique(np.concatenate([tris.ravel(), np.array([c.a for c in cons] + [c.b for c in cons], dtype=tris.dtype)]))
    remap = -np.ones(len(pa), dtype=np.int64)
    remap[used] = np.arange(len(used))
    verts = pa[used]
    tris = remap[tris]
    keep_cons = [c for c in cons if parent_filter is None or parent_filter(c)]
    be = np.array([[remap[c.a], remap[c.b]] for c in keep_cons], dtype=np.int64)
    bp = np.array([c.parent for c in keep_cons], dtype=np.int64)
    # order sub-edges along each parent edge
    mids = 0.5 * (verts[be[:, 0]] + verts[be[:, 1]])
    sx, sy, ex, ey = dom.outer.edge_arrays()
    tpar = np.empty(len(be))
    for i, par in enumerate(bp):
        dx, dy = ex[par] - sx[par], ey[par] - sy[par]
        tpar[i] = ((mids[i, 0] - sx[par]) * dx + (mids[i, 1] - sy[par]) * dy) / (
            dx * dx + dy * dy
        )
    order = np.lexsort((tpar, bp))
    be = be[order]
    bp = bp[order]
    p = verts[tris]
    emax = 0.0
    for k in range(3):
        d = p[:, (k + 1) % 3] - p[:, k]
        emax = max(emax, float(np.hypot(d[:, 0], d[:, 1]).max()))
    mesh = Mesh(
        domain=dom,
        vertices=verts,
        triangles=tris,
        boundary_edges=be,
        boundary_parent=bp,
        h=emax,
    )
    mesh.validate()
    return mesh


# ---------------------------------------------------------------------------
# boundary quadrature
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BoundaryQuadrature:
    """Per-edge masses and exact trace-product integrals for one label.

    The local 2x2 matrices integrate products of affine traces against the
    measure exactly (equivalently: Simpson's rule on each constant-density
    piece, which is exact for quadratics).  Sub-edge masses sum to the
    measure of the labeled portion exactly.
    """

    mesh: Mesh
    label: str
    edge_ids: np.ndarray
    node_pairs: np.ndarray
    masses: np.ndarray
    local: np.ndarray

    @property
    def total_mass(self) -> float:
        return float(math.fsum(self.masses.tolist()))

    @cached_property
    def matrix(self):
        nv = self.mesh.n_vertices
        if len(self.node_pairs) == 0:
            return coo_matrix((nv, nv)).tocsr()
        i = np.repeat(self.node_pairs, 2, axis=1).ravel()
        j = np.tile(self.node_pairs, (1, 2)).ravel()
        v = self.local.reshape(len(self.node_pairs), 4).ravel()
        return coo_matrix((v, (i, j)), shape=(nv, nv)).tocsr()

    def inner(self, u, v) -> complex:
        return complex(np.vdot(v, self.matrix @ u))

    def norm(self, u) -> float:
        val = self.inner(u, u)
        return math.sqrt(max(val.real, 0.0))


def boundary_quadrature(mesh: Mesh, mu: BoundaryMeasure, label: str) -> BoundaryQuadrature:
    """Quadrature of the measure over the mesh boundary edges with this label."""
    ids = mesh.boundary_edges_with_label(label)
    pairs = mesh.boundary_edges[ids]
    masses = np.zeros(len(ids))
    local = np.zeros((len(ids), 2, 2))
    for k, (i, j) in enumerate(pairs):
        a = mesh.vertices[i]
        b = mesh.vertices[j]
        pieces = mu.overlaps_on_subsegment(a, b)
        ln = float(np.hypot(*(b - a)))
        m = 0.0
        loc = np.zeros((2, 2))
        for t0, t1, rho in pieces:
            m += rho * (t1 - t0) * ln
            i11 = ((1 - t0) ** 3 - (1 - t1) ** 3) / 3.0
            i22 = (t1**3 - t0**3) / 3.0
            i12 = (t1**2 - t0**2) / 2.0 - (t1**3 - t0**3) / 3.0
            loc += rho * ln * np.array([[i11, i12], [i12, i22]])
        masses[k] = m
        local[k] = loc
    return BoundaryQuadrature(
        mesh=mesh, label=label, edge_ids=ids, node_pairs=pairs, masses=masses, local=local
    )


# ---------------------------------------------------------------------------
# hold-all (annulus) meshing for extension experiments
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HoldallMesh:
    """Mesh of the hold-all D that contains a given mesh of Omega verbatim."""

    mesh: Mesh
    omega_mesh: Mesh
    omega_to_d: np.ndarray  # omega node id -> D-mesh node id


def holdall_mesh(omega_mesh: Mesh, holdall: Polygon, h: float, *, max_rounds: int = 60) -> HoldallMesh:
    """Mesh D around the given Omega mesh, sharing its boundary nodes exactly.

    Omega must be strictly inside D (clearance >= h); the shared boundary
    chain is protected from refinement so the glued mesh conforms node-to-node.
    Quality near the protected chain is best-effort.
    """
    om_poly = omega_mesh.domain.outer
    if not polygon_contains(holdall, om_poly):
        raise GeometryError("omega mesh escapes the hold-all")
    chain = omega_mesh.boundary_chain()
    chain_pts = omega_mesh.vertices[chain]
    clearance = holdall.distance_to_boundary(chain_pts).min()
    if clearance < h:
        raise GeometryError("hold-all too tight: need clearance >= h around omega")

    dverts = holdall.vertices
    nd = len(dverts)
    points = [tuple(p) for p in chain_pts]
    nchain = len(points)
    cons = [_Constraint(i, (i + 1) % nchain, -1, True) for i in range(nchain)]
    outer_ids = []
    for v in dverts:
        outer_ids.append(len(points))
        points.append(tuple(v))
    for e in range(nd):
        a = dverts[e]
        b = dverts[(e + 1) % nd]
        chain_d = _split_chain(a, b, h)
        ids = [outer_ids[e]]
        for p in chain_d[1:]:
            ids.append(len(points))
            points.append(tuple(p))
        ids.append(outer_ids[(e + 1) % nd])
        for i in range(len(ids) - 1):
            cons.append(_Constraint(ids[i], ids[i + 1], e, False))

    cmid = 0.5 * (chain_pts + np.roll(chain_pts, -1, axis=0))
    crad = 0.5 * np.hypot(*(np.roll(chain_pts, -1, axis=0) - chain_pts).T)
    ctree = cKDTree(cmid)

    def inside(pts):
        return holdall.contains_points(pts) & ~om_poly.contains_points(pts)

    def keep(pts):
        ok = inside(pts)
        if np.any(ok):
            d1 = holdall.distance_to_boundary(pts[ok])
            d2 = om_poly.distance_to_boundary(pts[ok])
            sub = (d1 >= 0.7 * h) & (d2 >= 0.7 * h)
            # Gabriel protection: never drop a point into a chain diametral circle
            dd, ii = ctree.query(pts[ok])
            sub &= dd >= crad[ii]
            ok[np.nonzero(ok)[0][~sub]] = False
        return ok

    seeds = _hex_seeds(holdall.bbox, h, keep)
    for s in seeds:
        points.append(tuple(s))

    mesher = _Mesher(points, cons, inside, h, 20.0, holdall.diameter)
    pa, tris = mesher.run(max_rounds=max_rounds, enforce_quality=False)
    dom_d = PolygonalDomain(holdall, tuple([_NEU_ALL] * nd))
    annulus = _assemble_annulus(dom_d, pa, tris, mesher.cons, nchain)

    # glue: omega vertices keep their ids; annulus chain nodes map onto them
    ann_verts, ann_tris, ann_be, ann_bp, chain_map = annulus
    nvo = omega_mesh.n_vertices
    coord_to_omega = {vt.tobytes(): i for i, vt in enumerate(np.ascontiguousarray(omega_mesh.vertices))}
    ann_map = -np.ones(len(ann_verts), dtype=np.int64)
    extra = []
    for i, vt in enumerate(np.ascontiguousarray(ann_verts)):
        key = vt.tobytes()
        if key in coord_to_omega:
            ann_map[i] = coord_to_omega[key]
        else:
            ann_map[i] = nvo + len(extra)
            extra.append(vt)
    if not np.all(ann_map[chain_map] < nvo):
        raise GeometryError("incompatible meshes: chain nodes failed to match")
    verts = np.vstack([omega_mesh.vertices, np.asarray(extra).reshape(-1, 2)])
    tris = np.vstack([omega_mesh.triangles.astype(np.int64), ann_map[ann_tris]])
    be = ann_map[ann_be]
    mesh = Mesh(
        domain=dom_d,
        vertices=verts,
        triangles=tris,
        boundary_edges=be,
        boundary_parent=ann_bp,
        h=max(omega_mesh.h, float(np.max(np.hypot(*(verts[tris[:, 1]] - verts[tris[:, 0]]).T)))),
    )
    mesh.validate()
    omega_to_d = np.arange(nvo, dtype=np.int64)
    return HoldallMesh(mesh=mesh, omega_mesh=omega_mesh, omega_to_d=omega_to_d)


def _assemble_annulus(dom_d, pa, tris, cons, nchain):
    p = pa[tris]
    sgn = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (
        p[:, 1, 1] - p[:, 0, 1]
    ) * (p[:, 2, 0] - p[:, 0, 0])
    tris = tris.copy()
    flip = sgn < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    keep_cons = [c for c in cons if c.parent >= 0]
    used = np.unique(
        np.concatenate(
            [
                tris.ravel(),
                np.arange(nchain, dtype=tris.dtype),
                np.array(
                    [c.a for c in keep_cons] + [c.b for c in keep_cons], dtype=tris.dtype
                ),
            ]
        )
    )
    remap = -np.ones(len(pa), dtype=np.int64)
    remap[used] = np.arange(len(used))
    verts = pa[used]
    tris = remap[tris]
    be = np.array([[remap[c.a], remap[c.b]] for c in keep_cons], dtype=np.int64)
    bp = np.array([c.parent for c in keep_cons], dtype=np.int64)
    chain_map = remap[np.arange(nchain)]
    return verts, tris, be, bp, chain_map
