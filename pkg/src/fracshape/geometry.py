"""Planar geometry for labeled polygonal domains.

Everything here is desk-scale computational geometry in n = 2: compact sets
are finite samples with a declared resolution, curves are polylines, and all
distance claims carry the +-2*resolution error bar documented on the
operation.  Types are immutable after construction and operations are pure
functions, so concurrent evaluation is safe.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra
from scipy.spatial import cKDTree
from scipy.spatial.distance import directed_hausdorff

from . import _kernels

DIRICHLET = "dir"
NEUMANN = "neu"
ROBIN = "rob"
LABELS = (DIRICHLET, NEUMANN, ROBIN)


class GeometryError(ValueError):
    """Invalid geometric input or a failed geometric precondition."""


def _as_points(points) -> np.ndarray:
    pts = np.ascontiguousarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise GeometryError("expected an (n, 2) array of planar points")
    return pts


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Polyline:
    """Ordered planar point chain with cached cumulative arclength."""

    points: np.ndarray

    def __post_init__(self):
        pts = _as_points(self.points)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if len(pts) < 1:
            raise GeometryError("empty polyline")
        seg = np.diff(pts, axis=0)
        seglen = np.hypot(seg[:, 0], seg[:, 1])
        if len(pts) >= 2 and np.any(seglen == 0.0):
            raise GeometryError("polyline has a zero-length segment")
        cum = np.concatenate([[0.0], np.cumsum(seglen)])
        cum.setflags(write=False)
        object.__setattr__(self, "cumlen", cum)

    cumlen: np.ndarray = field(init=False, repr=False)

    @property
    def length(self) -> float:
        return float(self.cumlen[-1])

    @property
    def n_segments(self) -> int:
        return len(self.points) - 1

    def segment_arrays(self):
        p = self.points
        return p[:-1, 0], p[:-1, 1], p[1:, 0], p[1:, 1]

    def point_at(self, s) -> np.ndarray:
        """Point(s) at arclength ``s`` (clamped to [0, length])."""
        s = np.clip(np.atleast_1d(np.asarray(s, dtype=np.float64)), 0.0, self.length)
        idx = np.clip(np.searchsorted(self.cumlen, s, side="right") - 1, 0, self.n_segments - 1)
        seg = self.points[idx + 1] - self.points[idx]
        seglen = self.cumlen[idx + 1] - self.cumlen[idx]
        t = np.where(seglen > 0, (s - self.cumlen[idx]) / np.where(seglen > 0, seglen, 1.0), 0.0)
        return self.points[idx] + t[:, None] * seg

    def resample(self, n: int) -> "Polyline":
        """Arclength-equispaced resampling with n points; endpoints preserved."""
        if n < 2:
            raise GeometryError("resample needs n >= 2")
        s = np.linspace(0.0, self.length, n)
        pts = self.point_at(s)
        pts[0] = self.points[0]
        pts[-1] = self.points[-1]
        # drop accidental duplicates from zero-length parameter gaps
        keep = np.concatenate([[True], np.any(np.diff(pts, axis=0) != 0.0, axis=1)])
        return Polyline(pts[keep])

    def sample(self, resolution: float) -> "PointSample":
        """Dense point sample at pitch <= resolution along the chain."""
        if resolution <= 0:
            raise GeometryError("resolution must be positive")
        n = max(2, int(math.ceil(self.length / resolution)) + 1)
        s = np.linspace(0.0, self.length, n)
        return PointSample(self.point_at(s), resolution)

    def reversed(self) -> "Polyline":
        return Polyline(self.points[::-1])

    @property
    def is_closed(self) -> bool:
        return bool(np.all(self.points[0] == self.points[-1]))

    def self_intersects(self) -> bool:
        return bool(
            _kernels.polyline_self_intersects(self.points[:, 0], self.points[:, 1], False)
        )


@dataclass(frozen=True, eq=False)
class Polygon:
    """Simple closed polygon, counterclockwise, positive signed area."""

    vertices: np.ndarray

    def __post_init__(self):
        v = _as_points(self.vertices)
        if len(v) < 3:
            raise GeometryError("polygon needs at least 3 vertices")
        if np.any(np.all(v[1:] == v[:-1], axis=1)) or np.all(v[0] == v[-1]):
            raise GeometryError("polygon has duplicate consecutive vertices")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        if self.signed_area <= 0:
            raise GeometryError("polygon must be counterclockwise (signed area > 0)")
        if _kernels.polyline_self_intersects(v[:, 0], v[:, 1], True):
            raise GeometryError("polygon is not simple")

    @property
    def n_edges(self) -> int:
        return len(self.vertices)

    @property
    def signed_area(self) -> float:
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        x2, y2 = np.roll(x, -1), np.roll(y, -1)
        return 0.5 * math.fsum((x * y2 - x2 * y).tolist())

    @property
    def area(self) -> float:
        return self.signed_area

    @property
    def perimeter(self) -> float:
        d = np.roll(self.vertices, -1, axis=0) - self.vertices
        return float(np.hypot(d[:, 0], d[:, 1]).sum())

    @property
    def diameter(self) -> float:
        # polygon diameter equals its vertex-set diameter
        v = self.vertices
        hull_d = 0.0
        step = max(1, 4_000_000 // max(len(v), 1))
        for i0 in range(0, len(v), step):
            blk = v[i0 : i0 + step]
            d2 = (blk[:, None, 0] - v[None, :, 0]) ** 2 + (blk[:, None, 1] - v[None, :, 1]) ** 2
            hull_d = max(hull_d, float(d2.max()))
        return math.sqrt(hull_d)

    @property
    def bbox(self):
        v = self.vertices
        return (v[:, 0].min(), v[:, 1].min(), v[:, 0].max(), v[:, 1].max())

    def edge_arrays(self):
        v = self.vertices
        w = np.roll(v, -1, axis=0)
        return v[:, 0], v[:, 1], w[:, 0], w[:, 1]

    def edge(self, i: int):
        v = self.vertices
        return v[i], v[(i + 1) % len(v)]

    def boundary_polyline(self) -> Polyline:
        return Polyline(np.vstack([self.vertices, self.vertices[:1]]))

    def contains_points(self, points) -> np.ndarray:
        pts = _as_points(np.atleast_2d(points))
        return _kernels.points_in_polygon(
            pts[:, 0], pts[:, 1], self.vertices[:, 0], self.vertices[:, 1]
        )

    def distance_to_boundary(self, points) -> np.ndarray:
        pts = _as_points(np.atleast_2d(points))
        sx, sy, ex, ey = self.edge_arrays()
        return _kernels.min_dist_points_segments(pts[:, 0], pts[:, 1], sx, sy, ex, ey)

    def contains_polygon(self, other: "Polygon", tol: float = 0.0) -> bool:
        """other subset of self; ``tol > 0`` admits shared boundary pieces."""
        inside = self.contains_points(other.vertices)
        if tol > 0:
            near = self.distance_to_boundary(other.vertices) <= tol
            ok_vertices = bool(np.all(inside | near))
        else:
            ok_vertices = bool(np.all(inside))
        if not ok_vertices:
            return False
        return not _segments_cross(self, other, touch_tol=tol)


@dataclass(frozen=True, eq=False)
class PointSample:
    """Finite stand-in for a compact set, with the producer's sampling pitch."""

    points: np.ndarray
    resolution: float

    def __post_init__(self):
        pts = _as_points(self.points)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if len(pts) == 0:
            raise GeometryError("empty set")
        if not self.resolution > 0:
            raise GeometryError("resolution must be positive")


@dataclass(frozen=True, eq=False)
class PolygonalDomain:
    """Polygon with one boundary-condition label per edge.

    ``design_region``, when present, is the region in which the Robin part may
    vary; Dirichlet-labeled edges must then keep positive distance to it.
    """

    outer: Polygon
    edge_labels: tuple
    design_region: Polygon | None = None

    def __post_init__(self):
        labels = tuple(self.edge_labels)
        object.__setattr__(self, "edge_labels", labels)
        if len(labels) != self.outer.n_edges:
            raise GeometryError("need exactly one label per polygon edge")
        bad = sorted(set(labels) - set(LABELS))
        if bad:
            raise GeometryError(f"unknown edge labels {bad}; use {LABELS}")
        if self.design_region is not None:
            for i, lab in enumerate(labels):
                if lab != DIRICHLET:
                    continue
                a, b = self.outer.edge(i)
                if _segment_meets_polygon(a, b, self.design_region):
                    raise GeometryError(
                        "Dirichlet edge %d intersects the design region" % i
                    )

    @property
    def polygon(self) -> Polygon:
        return self.outer

    def edges_with_label(self, label: str) -> np.ndarray:
        return np.nonzero(np.asarray(self.edge_labels, dtype=object) == label)[0]

    def boundary_sample(self, resolution: float) -> PointSample:
        return self.outer.boundary_polyline().sample(resolution)

    def same_geometry(self, other: "PolygonalDomain") -> bool:
        a, b = self.outer.vertices, other.outer.vertices
        return a.shape == b.shape and bool(np.all(a == b)) and self.edge_labels == other.edge_labels


@dataclass(frozen=True, eq=False)
class CigarProfile:
    """Cigar radius profile lambda(z) = |x-z||y-z|/|x-y| along a sampled curve."""

    x: np.ndarray
    y: np.ndarray
    samples: np.ndarray
    lam: np.ndarray


# ---------------------------------------------------------------------------
# segment predicates (small inputs; plain numpy)
# ---------------------------------------------------------------------------


def _orient(a, b, c):
    return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (
        b[..., 1] - a[..., 1]
    ) * (c[..., 0] - a[..., 0])


def _segments_intersect_any(a0, a1, b0, b1) -> bool:
    """Any proper or touching intersection between the two segment families."""
    A0 = a0[:, None, :]
    A1 = a1[:, None, :]
    B0 = b0[None, :, :]
    B1 = b1[None, :, :]
    d1 = _orient(A0, A1, B0)
    d2 = _orient(A0, A1, B1)
    d3 = _orient(B0, B1, A0)
    d4 = _orient(B0, B1, A1)
    proper = (d1 * d2 < 0) & (d3 * d4 < 0)
    if np.any(proper):
        return True

    def on(a, b, c, dz):
        return (
            (dz == 0)
            & (np.minimum(a[..., 0], b[..., 0]) <= c[..., 0])
            & (c[..., 0] <= np.maximum(a[..., 0], b[..., 0]))
            & (np.minimum(a[..., 1], b[..., 1]) <= c[..., 1])
            & (c[..., 1] <= np.maximum(a[..., 1], b[..., 1]))
        )

    touch = (
        on(A0, A1, B0, d1) | on(A0, A1, B1, d2) | on(B0, B1, A0, d3) | on(B0, B1, A1, d4)
    )
    return bool(np.any(touch))


def _segments_cross(p: Polygon, q: Polygon, touch_tol: float = 0.0) -> bool:
    """Proper boundary crossings between two polygons (touching allowed if tol>0)."""
    pa = p.vertices
    pb = np.roll(pa, -1, axis=0)
    qa = q.vertices
    qb = np.roll(qa, -1, axis=0)
    A0, A1 = pa[:, None, :], pb[:, None, :]
    B0, B1 = qa[None, :, :], qb[None, :, :]
    d1 = _orient(A0, A1, B0)
    d2 = _orient(A0, A1, B1)
    d3 = _orient(B0, B1, A0)
    d4 = _orient(B0, B1, A1)
    if touch_tol > 0.0:
        # scale-aware strictness: orientation magnitudes below tol*edge-length
        # count as touching, not crossing
        la = np.hypot((A1 - A0)[..., 0], (A1 - A0)[..., 1])
        lb = np.hypot((B1 - B0)[..., 0], (B1 - B0)[..., 1])
        eps1 = touch_tol * la
        eps2 = touch_tol * lb
        proper = ((d1 < -eps1) & (d2 > eps1) | (d1 > eps1) & (d2 < -eps1)) & (
            (d3 < -eps2) & (d4 > eps2) | (d3 > eps2) & (d4 < -eps2)
        )
        return bool(np.any(proper))
    return _segments_intersect_any(pa, pb, qa, qb)


def _segment_meets_polygon(a, b, poly: Polygon) -> bool:
    if bool(np.any(poly.contains_points(np.array([a, b])))):
        return True
    qa = poly.vertices
    qb = np.roll(qa, -1, axis=0)
    return _segments_intersect_any(np.array([a]), np.array([b]), qa, qb)


def polygon_contains(outer: Polygon, inner: Polygon, *, tol: float = 1e-12) -> bool:
    """Vertex containment plus edge non-crossing; exact for polygons."""
    scale = max(outer.diameter, inner.diameter)
    return outer.contains_polygon(inner, tol=tol * scale)


def polygons_disjoint(p: Polygon, q: Polygon) -> bool:
    """Closures disjoint: no touching, no crossing, no containment."""
    pa, pb = p.vertices, np.roll(p.vertices, -1, axis=0)
    qa, qb = q.vertices, np.roll(q.vertices, -1, axis=0)
    if _segments_intersect_any(pa, pb, qa, qb):
        return False
    if bool(np.any(p.contains_points(q.vertices))) or bool(
        np.any(q.contains_points(p.vertices))
    ):
        return False
    return True


# ---------------------------------------------------------------------------
# distances between samples and curves
# ---------------------------------------------------------------------------


def hausdorff_distance(a: PointSample, b: PointSample) -> float:
    """Hausdorff distance of the two samples (exact for the samples).

    Approximates the distance of the sampled sets within
    2 * max(a.resolution, b.resolution).
    """
    d_ab = directed_hausdorff(a.points, b.points)[0]
    d_ba = directed_hausdorff(b.points, a.points)[0]
    return float(max(d_ab, d_ba))


def frechet_distance(curve1: Polyline, curve2: Polyline) -> float:
    """Discrete Fréchet distance over the vertex chains.

    Upper-bounds the continuous Fréchet distance within one vertex spacing.
    """
    if len(curve1.points) < 2 or len(curve2.points) < 2:
        raise GeometryError("degenerate polyline (need >= 2 points)")
    return float(_kernels.discrete_frechet(curve1.points, curve2.points))


def raster_polygon(poly: Polygon, x0: float, y0: float, pitch: float, nx: int, ny: int) -> np.ndarray:
    """Boolean pixel mask: centers (x0+(i+1/2)p, y0+(j+1/2)p) inside the polygon.

    Scanline parity fill; exact for centers not on the boundary (a null set).
    """
    v = poly.vertices
    ax, ay = v[:, 0], v[:, 1]
    bx, by = np.roll(ax, -1), np.roll(ay, -1)
    diff = np.zeros((ny, nx + 1), dtype=np.int64)
    ys0 = y0 + 0.5 * pitch
    for e in range(len(v)):
        ylo, yhi = (ay[e], by[e]) if ay[e] < by[e] else (by[e], ay[e])
        j0 = max(0, int(math.ceil((ylo - ys0) / pitch)))
        j1 = min(ny, int(math.ceil((yhi - ys0) / pitch)))
        if j1 <= j0:
            continue
        yy = ys0 + pitch * np.arange(j0, j1)
        cross = (ay[e] > yy) != (by[e] > yy)
        if not np.any(cross):
            continue
        rows = np.arange(j0, j1)[cross]
        xint = ax[e] + (yy[cross] - ay[e]) * (bx[e] - ax[e]) / (by[e] - ay[e])
        cols = np.clip(np.ceil((xint - x0) / pitch - 0.5).astype(np.int64), 0, nx)
        np.add.at(diff, (rows, cols), 1)
    return (np.cumsum(diff[:, :nx], axis=1) % 2).astype(bool)


def _shared_grid(polys: Sequence[Polygon], pitch: float):
    xs = [p.bbox for p in polys]
    x0 = min(b[0] for b in xs) - pitch
    y0 = min(b[1] for b in xs) - pitch
    x1 = max(b[2] for b in xs) + pitch
    y1 = max(b[3] for b in xs) + pitch
    nx = int(math.ceil((x1 - x0) / pitch))
    ny = int(math.ceil((y1 - y0) / pitch))
    return x0, y0, nx, ny


def char_fn_distance(
    dom1: PolygonalDomain, dom2: PolygonalDomain, p: float = 1.0, pitch: float = 1e-2
) -> float:
    """L^p norm of the indicator difference by pixel counting.

    For indicators this is (symmetric-difference area)^(1/p), up to
    pitch * perimeter discretization error.
    """
    if not (p >= 1.0 and math.isfinite(p)):
        raise GeometryError("p must lie in [1, inf)")
    if pitch <= 0:
        raise GeometryError("pitch must be positive")
    x0, y0, nx, ny = _shared_grid([dom1.outer, dom2.outer], pitch)
    m1 = raster_polygon(dom1.outer, x0, y0, pitch, nx, ny)
    m2 = raster_polygon(dom2.outer, x0, y0, pitch, nx, ny)
    area = float(np.count_nonzero(m1 ^ m2)) * pitch * pitch
    return area ** (1.0 / p)


def domain_hausdorff_distance(
    dom1: PolygonalDomain,
    dom2: PolygonalDomain,
    holdall: Polygon,
    resolution: float,
) -> float:
    """Hausdorff distance of the complements within the hold-all.

    Grid discretization at the given pitch of closure(D) minus Omega_i; the
    open-set Hausdorff distance of the spec's convergence notion.
    """
    for dom in (dom1, dom2):
        if not polygon_contains(holdall, dom.outer, tol=1e-9):
            raise GeometryError("domain escapes hold-all")
    x0, y0, nx, ny = _shared_grid([holdall], resolution)
    in_d = raster_polygon(holdall, x0, y0, resolution, nx, ny)
    comp = []
    for dom in (dom1, dom2):
        m = raster_polygon(dom.outer, x0, y0, resolution, nx, ny)
        comp.append(in_d & ~m)
    if not comp[0].any() and not comp[1].any():
        return 0.0
    if not comp[0].any() or not comp[1].any():
        raise GeometryError("one complement is empty at this resolution")
    pts = []
    for m in comp:
        jj, ii = np.nonzero(m)
        pts.append(
            np.column_stack([x0 + (ii + 0.5) * resolution, y0 + (jj + 0.5) * resolution])
        )
    return float(
        max(directed_hausdorff(pts[0], pts[1])[0], directed_hausdorff(pts[1], pts[0])[0])
    )


# ---------------------------------------------------------------------------
# cigar certification and epsilon estimation
# ---------------------------------------------------------------------------


def cigar_profile(curve: Polyline, x, y, n_samples: int) -> CigarProfile:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    xy = float(np.hypot(*(x - y)))
    if xy == 0.0:
        raise GeometryError("coincident endpoints")
    samples = curve.resample(max(2, n_samples)).points
    lam = np.hypot(*(samples - x).T) * np.hypot(*(samples - y).T) / xy
    return CigarProfile(x=x, y=y, samples=samples, lam=lam)


def cigar_contained(
    curve: Polyline,
    x,
    y,
    eps: float,
    dom: PolygonalDomain,
    n_samples: int = 48,
) -> bool:
    """Sampled certificate that the 1/eps-cigar of the curve lies inside the domain.

    True iff length(curve) <= |x-y|/eps and every of ``n_samples``
    arclength-equispaced samples z satisfies d(z, boundary) >= eps*lambda(z)
    and lies inside the domain.  A sampled certificate, not an exact proof.
    """
    if eps <= 0:
        raise GeometryError("eps must be positive")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    xy = float(np.hypot(*(x - y)))
    if xy == 0.0:
        raise GeometryError("coincident endpoints")
    tol = 1e-9 * max(xy, curve.length)
    if np.hypot(*(curve.points[0] - x)) > tol or np.hypot(*(curve.points[-1] - y)) > tol:
        raise GeometryError("x, y must be the endpoints of the curve")
    if curve.length > xy / eps * (1 + 1e-12):
        return False
    prof = cigar_profile(curve, x, y, n_samples)
    inside = dom.outer.contains_points(prof.samples)
    if not np.all(inside):
        return False
    d = dom.outer.distance_to_boundary(prof.samples)
    return bool(np.all(d >= eps * prof.lam - 1e-15))


@dataclass(frozen=True)
class PairCertificate:
    x: tuple
    y: tuple
    curve: Polyline
    eps_pair: float
    eps_grid: float


@dataclass(frozen=True)
class EpsilonReport:
    eps: float
    pairs: tuple
    n_samples: int
    grid_pitch: float
    curve_family: str


def _chaikin(pts: np.ndarray, rounds: int = 2) -> np.ndarray:
    for _ in range(rounds):
        if len(pts) < 3:
            return pts
        q = 0.75 * pts[:-1] + 0.25 * pts[1:]
        r = 0.25 * pts[:-1] + 0.75 * pts[1:]
        mid = np.empty((2 * (len(pts) - 1), 2))
        mid[0::2] = q
        mid[1::2] = r
        pts = np.vstack([pts[:1], mid, pts[-1:]])
    return pts


def _prune_collinear(pts: np.ndarray, tol: float) -> np.ndarray:
    if len(pts) < 3:
        return pts
    keep = [0]
    for i in range(1, len(pts) - 1):
        a = pts[keep[-1]]
        b = pts[i]
        c = pts[i + 1]
        cr = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if abs(cr) > tol:
            keep.append(i)
    keep.append(len(pts) - 1)
    return pts[keep]


class _GridPaths:
    """8-connected shortest paths in a uniform grid restricted to the domain."""

    def __init__(self, dom: PolygonalDomain, pitch: float, clearance: float):
        self.dom = dom
        poly = dom.outer
        x0, y0, x1, y1 = poly.bbox
        nx = int(math.ceil((x1 - x0) / pitch)) + 1
        ny = int(math.ceil((y1 - y0) / pitch)) + 1
        gx, gy = np.meshgrid(
            x0 + pitch * np.arange(nx), y0 + pitch * np.arange(ny), indexing="ij"
        )
        pts = np.column_stack([gx.ravel(), gy.ravel()])
        inside = poly.contains_points(pts)
        ok = inside.copy()
        if np.any(inside):
            d = poly.distance_to_boundary(pts[inside])
            ok[inside] = d >= clearance
        self.mask = ok.reshape(nx, ny)
        self.pts = pts
        self.nx, self.ny = nx, ny
        ids = -np.ones(nx * ny, dtype=np.int64)
        ids[ok] = np.arange(int(ok.sum()))
        self.ids = ids
        self.node_xy = pts[ok]
        rows, cols, data = [], [], []
        offs = [(1, 0, pitch), (0, 1, pitch), (1, 1, pitch * math.sqrt(2)), (1, -1, pitch * math.sqrt(2))]
        m = self.mask
        for dx_, dy_, w in offs:
            a = np.zeros_like(m)
            sl_a = (slice(0, nx - dx_), slice(max(0, -dy_), ny - max(0, dy_)))
            sl_b = (slice(dx_, nx), slice(max(0, dy_), ny - max(0, -dy_)))
            both = m[sl_a] & m[sl_b]
            ia = np.zeros_like(m, dtype=bool)
            ia[sl_a] = both
            ib = np.zeros_like(m, dtype=bool)
            ib[sl_b] = both
            na = self.ids.reshape(nx, ny)[ia]
            nb = self.ids.reshape(nx, ny)[ib]
            rows.append(na)
            cols.append(nb)
            data.append(np.full(na.shape, w))
        n = len(self.node_xy)
        if n == 0:
            self.graph = None
        else:
            rows = np.concatenate(rows)
            cols = np.concatenate(cols)
            data = np.concatenate(data)
            self.graph = coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()
        self.tree = cKDTree(self.node_xy) if n else None

    def snap(self, p) -> int:
        """Nearest graph node whose connecting segment stays inside the domain."""
        if self.tree is None:
            raise GeometryError("not path-connected at resolution")
        p = np.asarray(p, dtype=np.float64)
        k = min(16, len(self.node_xy))
        _, cand = self.tree.query(p, k=k)
        cand = np.atleast_1d(cand)
        poly = self.dom.outer
        for c in cand:
            q = self.node_xy[int(c)]
            ts = np.linspace(0.0, 1.0, 9)[1:-1]
            probe = p[None, :] + ts[:, None] * (q - p)[None, :]
            if bool(np.all(poly.contains_points(probe))):
                return int(c)
        return int(cand[0])

    def paths_from(self, src: int):
        dist, pred = dijkstra(
            self.graph, directed=False, indices=src, return_predecessors=True
        )
        return dist, pred

    @staticmethod
    def walk(pred, src: int, dst: int):
        path = [dst]
        while path[-1] != src:
            nxt = pred[path[-1]]
            if nxt < 0:
                raise GeometryError("not path-connected at resolution")
            path.append(int(nxt))
        return path[::-1]


def _curve_eps_bound(samples: np.ndarray, x, y, curve_length: float, dom: PolygonalDomain):
    xy = float(np.hypot(*(np.asarray(x) - np.asarray(y))))
    inside = dom.outer.contains_points(samples)
    if not np.all(inside):
        return 0.0
    d = dom.outer.distance_to_boundary(samples)
    lam = np.hypot(*(samples - x).T) * np.hypot(*(samples - y).T) / xy
    pos = lam > 1e-14 * xy
    dist_bound = float(np.min(d[pos] / lam[pos])) if np.any(pos) else np.inf
    len_bound = xy / curve_length if curve_length > 0 else np.inf
    return max(0.0, min(dist_bound, len_bound))


def estimate_epsilon_report(
    dom: PolygonalDomain,
    pair_grid: int = 12,
    curve_family: str = "both",
    *,
    n_samples: int = 48,
    grid_divisions: int = 256,
    eps_grid=None,
    pair_clearance: float = 3.0,
) -> EpsilonReport:
    """Certified-at-resolution lower bound for the uniform-domain epsilon.

    For every sampled interior pair the best candidate curve (straight
    segment and/or smoothed grid shortest path) is scored by the largest
    epsilon it certifies; the report keeps the per-pair certificates so each
    can be re-checked with :func:`cigar_contained`.
    """
    if pair_grid < 2:
        raise GeometryError("pair_grid must be >= 2")
    if curve_family not in ("segment", "grid_shortest_path", "both"):
        raise GeometryError("unknown curve family %r" % curve_family)
    poly = dom.outer
    pitch = poly.diameter / grid_divisions
    if eps_grid is None:
        eps_grid = np.geomspace(1e-3, 1.0, 64)
    eps_grid = np.sort(np.asarray(eps_grid, dtype=np.float64))

    x0, y0, x1, y1 = poly.bbox
    us = x0 + (np.arange(pair_grid) + 0.5) * (x1 - x0) / pair_grid
    vs = y0 + (np.arange(pair_grid) + 0.5) * (y1 - y0) / pair_grid
    cand = np.array([(u, v) for u in us for v in vs])
    inside = poly.contains_points(cand)
    cand = cand[inside]
    if len(cand):
        clear = poly.distance_to_boundary(cand) >= pair_clearance * pitch
        cand = cand[clear]
    if len(cand) < 2:
        raise GeometryError("pair grid too coarse: fewer than two interior samples")

    gp = None
    snapped = None
    if curve_family in ("grid_shortest_path", "both"):
        gp = _GridPaths(dom, pitch, 0.75 * pitch)
        snapped = np.array([gp.snap(p) for p in cand], dtype=np.int64)

    pairs = []
    eps_min_grid = None
    col_tol = 1e-12 * pitch * pitch
    for i in range(len(cand)):
        preds = None
        if gp is not None:
            _, preds = gp.paths_from(int(snapped[i]))
        for j in range(i + 1, len(cand)):
            x, y = cand[i], cand[j]
            best_eps = 0.0
            best_curve = None
            if curve_family in ("segment", "both"):
                seg = Polyline(np.array([x, y])).resample(n_samples)
                b = _curve_eps_bound(seg.points, x, y, seg.length, dom)
                if b > best_eps or best_curve is None:
                    best_eps, best_curve = b, seg
            if gp is not None:
                node_path = _GridPaths.walk(preds, int(snapped[i]), int(snapped[j]))
                chain = np.vstack([x, gp.node_xy[node_path], y])
                chain = chain[np.concatenate([[True], np.any(np.diff(chain, axis=0) != 0, axis=1)])]
                if len(chain) >= 2:
                    chain = _prune_collinear(chain, col_tol)
                    chain = _chaikin(chain, rounds=2)
                    curve = Polyline(chain).resample(n_samples)
                    b = _curve_eps_bound(curve.points, x, y, curve.length, dom)
                    if b > best_eps:
                        best_eps, best_curve = b, curve
            passing = eps_grid[eps_grid <= best_eps * (1 - 1e-12)]
            eps_g = float(passing[-1]) if len(passing) else 0.0
            pairs.append(
                PairCertificate(
                    x=tuple(x), y=tuple(y), curve=best_curve, eps_pair=best_eps, eps_grid=eps_g
                )
            )
            eps_min_grid = eps_g if eps_min_grid is None else min(eps_min_grid, eps_g)
    return EpsilonReport(
        eps=float(eps_min_grid),
        pairs=tuple(pairs),
        n_samples=n_samples,
        grid_pitch=pitch,
        curve_family=curve_family,
    )


def estimate_epsilon(dom: PolygonalDomain, pair_grid: int = 12, curve_family: str = "both", **kw) -> float:
    return estimate_epsilon_report(dom, pair_grid, curve_family, **kw).eps


# ---------------------------------------------------------------------------
# prefractal generator
# ---------------------------------------------------------------------------


def koch_prefractal(base: Polyline, level: int, bump_angle: float = math.pi / 3) -> Polyline:
    """Classical Koch generator: 4 segments per segment, bump on the left.

    The isosceles bump sits over the middle third with apex angle
    ``bump_angle``; pi/3 gives the standard equilateral construction with
    length scaling (4/3)^level.
    """
    if level < 0:
        raise GeometryError("level must be >= 0")
    if not (0.0 < bump_angle < math.pi / 2):
        raise GeometryError("bump_angle must lie in (0, pi/2)")
    pts = base.points
    height_factor = 1.0 / (6.0 * math.tan(bump_angle / 2.0))
    for _ in range(level):
        a = pts[:-1]
        b = pts[1:]
        d = b - a
        n = np.column_stack([-d[:, 1], d[:, 0]])  # left normal, length |d|
        p1 = a + d / 3.0
        p2 = a + 2.0 * d / 3.0
        apex = a + 0.5 * d + height_factor * n
        out = np.empty((4 * len(a) + 1, 2))
        out[0] = pts[0]
        out[1::4] = p1
        out[2::4] = apex
        out[3::4] = p2
        out[4::4] = b
        pts = out
    result = Polyline(pts)
    if len(pts) > 3 and _kernels.polyline_self_intersects(pts[:, 0], pts[:, 1], False):
        raise GeometryError("generator overlaps")
    return result


# ---------------------------------------------------------------------------
# convergence in the sense of compacts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProbeResult:
    kind: str  # "inside" | "outside"
    pass_index: int | None  # first index after which containment persists


@dataclass(frozen=True)
class CompactsReport:
    probes: tuple

    @property
    def all_pass(self) -> bool:
        return all(p.pass_index is not None for p in self.probes)


def compacts_convergence_check(
    sequence: Sequence[PolygonalDomain],
    dom: PolygonalDomain,
    probes_in: Iterable[Polygon],
    probes_out: Iterable[Polygon],
) -> CompactsReport:
    """First index after which each probe is inside (resp. outside) all later members."""
    results = []
    for probe in probes_in:
        if not polygon_contains(dom.outer, probe):
            raise GeometryError("invalid probe")
        ok = [polygon_contains(m.outer, probe) for m in sequence]
        results.append(ProbeResult("inside", _suffix_index(ok)))
    for probe in probes_out:
        if not polygons_disjoint(dom.outer, probe):
            raise GeometryError("invalid probe")
        ok = [polygons_disjoint(m.outer, probe) for m in sequence]
        results.append(ProbeResult("outside", _suffix_index(ok)))
    return CompactsReport(probes=tuple(results))


def _suffix_index(flags) -> int | None:
    idx = None
    for i in range(len(flags) - 1, -1, -1):
        if not flags[i]:
            break
        idx = i
    return idx
