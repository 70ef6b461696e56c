"""Shape-class membership checks and sequence-convergence diagnostics.

A domain/measure pair is admissible for fixed class parameters when the
kernel/hold-all sandwiching, the certified epsilon lower bound, and the
two-sided Ahlfors scaling constants all hold at the declared sampling
resolutions.  Every verdict is an empirical, grid-certified statement.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    GeometryError,
    Polygon,
    PolygonalDomain,
    char_fn_distance,
    compacts_convergence_check,
    domain_hausdorff_distance,
    estimate_epsilon_report,
    polygon_contains,
)
from .measures import (
    BoundaryMeasure,
    verify_Ds,
    verify_Ld,
    verify_lower_ahlfors,
    verify_normalized,
    verify_upper_ahlfors,
    weak_convergence_gap,
)


@dataclass(frozen=True, eq=False)
class ShapeClassParams:
    """Parameters (D, D0, eps, s, d, lower/upper Ahlfors constants) of a class."""

    holdall: Polygon
    kernel: Polygon
    eps: float
    s: float
    d: float
    lower_const: float
    upper_const: float

    def __post_init__(self):
        if not polygon_contains(self.holdall, self.kernel, tol=1e-9):
            raise GeometryError("kernel D0 must be contained in the hold-all D")
        if not self.eps > 0:
            raise GeometryError("eps must be positive")
        if not (1.0 <= self.s < 2.0):
            raise GeometryError("need n-1 <= s < n, i.e. 1 <= s < 2")
        if not (0.0 <= self.d <= self.s):
            raise GeometryError("need 0 <= d <= s")
        if not (self.lower_const > 0 and self.upper_const > 0):
            raise GeometryError("scaling constants must be positive")


@dataclass(frozen=True)
class AdmissibilityReport:
    contains_kernel: bool
    inside_holdall: bool
    epsilon_certified: bool
    lower_ok: bool
    upper_ok: bool
    epsilon_estimate: float
    lower_constant: float
    upper_constant: float

    @property
    def verdict(self) -> bool:
        return (
            self.contains_kernel
            and self.inside_holdall
            and self.epsilon_certified
            and self.lower_ok
            and self.upper_ok
        )


@dataclass(frozen=True)
class JonssonReport:
    contains_kernel: bool
    inside_holdall: bool
    epsilon_certified: bool
    ds_ok: bool
    ld_ok: bool
    normalized_ok: bool
    epsilon_estimate: float
    ds_constant: float
    ld_constant: float
    c1: float
    c2: float

    @property
    def verdict(self) -> bool:
        return (
            self.contains_kernel
            and self.inside_holdall
            and self.epsilon_certified
            and self.ds_ok
            and self.ld_ok
            and self.normalized_ok
        )


def carrier_is_boundary(mu: BoundaryMeasure, poly: Polygon, tol: float = 1e-9) -> bool:
    """Does the carrier trace exactly the polygon boundary (up to tol*diam)?"""
    scale = max(poly.diameter, 1e-300)
    if abs(mu.total_length - poly.perimeter) > 1e-9 * scale:
        return False
    probe = []
    for part in mu.parts:
        p = part.points
        probe.append(p)
        probe.append(0.5 * (p[:-1] + p[1:]))
    probe = np.vstack(probe)
    if float(poly.distance_to_boundary(probe).max()) > tol * scale:
        return False
    bp = poly.boundary_polyline().points
    back = np.vstack([bp, 0.5 * (bp[:-1] + bp[1:])])
    from . import _kernels

    sx, sy, ex, ey, _ = mu._segs
    d = _kernels.min_dist_points_segments(back[:, 0], back[:, 1], sx, sy, ex, ey)
    return float(d.max()) <= tol * scale


_DEFAULT_EPS_OPTS = {"pair_grid": 8, "curve_family": "both"}
_DEFAULT_SWEEP_OPTS = {"centers": 200, "radii": 40}


def check_shape_admissible(
    dom: PolygonalDomain,
    mu: BoundaryMeasure,
    params: ShapeClassParams,
    *,
    eps_opts: dict | None = None,
    sweep_opts: dict | None = None,
) -> AdmissibilityReport:
    """Kernel/hold-all containment, certified epsilon, and Ahlfors bounds."""
    if not carrier_is_boundary(mu, dom.outer):
        raise GeometryError("measure not a boundary volume for this domain")
    eo = dict(_DEFAULT_EPS_OPTS, **(eps_opts or {}))
    so = dict(_DEFAULT_SWEEP_OPTS, **(sweep_opts or {}))
    contains_kernel = polygon_contains(dom.outer, params.kernel, tol=1e-9)
    inside_holdall = polygon_contains(params.holdall, dom.outer, tol=1e-9)
    family = eo.pop("curve_family")
    pair_grid = eo.pop("pair_grid")
    eps_hat = estimate_epsilon_report(dom, pair_grid, family, **eo).eps
    low = verify_lower_ahlfors(mu, params.s, closed=True, threshold=params.lower_const, **so)
    up = verify_upper_ahlfors(mu, params.d, threshold=params.upper_const, **so)
    return AdmissibilityReport(
        contains_kernel=contains_kernel,
        inside_holdall=inside_holdall,
        epsilon_certified=bool(eps_hat >= params.eps),
        lower_ok=bool(low.passed),
        upper_ok=bool(up.passed),
        epsilon_estimate=float(eps_hat),
        lower_constant=low.best_constant,
        upper_constant=up.best_constant,
    )


def check_jonsson_admissible(
    dom: PolygonalDomain,
    mu: BoundaryMeasure,
    params: ShapeClassParams,
    cs: float,
    cd: float,
    c1_bar: float,
    c2: float,
    *,
    eps_opts: dict | None = None,
    sweep_opts: dict | None = None,
) -> JonssonReport:
    """Same sandwiching, with Jonsson's D_s / L_d / normalization conditions."""
    if not carrier_is_boundary(mu, dom.outer):
        raise GeometryError("measure not a boundary volume for this domain")
    eo = dict(_DEFAULT_EPS_OPTS, **(eps_opts or {}))
    so = dict(_DEFAULT_SWEEP_OPTS, **(sweep_opts or {}))
    contains_kernel = polygon_contains(dom.outer, params.kernel, tol=1e-9)
    inside_holdall = polygon_contains(params.holdall, dom.outer, tol=1e-9)
    family = eo.pop("curve_family")
    pair_grid = eo.pop("pair_grid")
    eps_hat = estimate_epsilon_report(dom, pair_grid, family, **eo).eps
    ds = verify_Ds(mu, params.s, threshold=cs, **so)
    ld = verify_Ld(mu, params.d, threshold=cd, **so)
    nrm = verify_normalized(mu, centers=so.get("centers", 200), bounds=(c1_bar, c2))
    return JonssonReport(
        contains_kernel=contains_kernel,
        inside_holdall=inside_holdall,
        epsilon_certified=bool(eps_hat >= params.eps),
        ds_ok=bool(ds.passed),
        ld_ok=bool(ld.passed),
        normalized_ok=bool(nrm.passed),
        epsilon_estimate=float(eps_hat),
        ds_constant=ds.best_constant,
        ld_constant=ld.best_constant,
        c1=nrm.best_constant,
        c2=float(nrm.aux["c2"]),
    )


# ---------------------------------------------------------------------------
# sequence diagnostics (the four convergence modes)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiagnosticsRow:
    index: int
    hausdorff_to_limit: float
    charfn_p1: float
    charfn_p2: float
    measure_gap: float
    carrier_hausdorff: float


@dataclass(frozen=True, eq=False)
class ConvergenceDiagnostics:
    rows: tuple
    compacts: object
    pitch: float

    def csv_rows(self):
        head = [
            "index",
            "hausdorff_to_limit",
            "charfn_p1",
            "charfn_p2",
            "measure_gap",
            "carrier_hausdorff",
        ]
        yield head
        for r in self.rows:
            yield [
                r.index,
                r.hausdorff_to_limit,
                r.charfn_p1,
                r.charfn_p2,
                r.measure_gap,
                r.carrier_hausdorff,
            ]


def default_probes(limit: PolygonalDomain, holdall: Polygon, pitch: float):
    """8 axis-aligned square probes: 4 deep inside the limit, 4 outside its closure."""
    poly = limit.outer
    x0, y0, x1, y1 = poly.bbox
    n = 64
    gx, gy = np.meshgrid(np.linspace(x0, x1, n), np.linspace(y0, y1, n), indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    ins = poly.contains_points(pts)
    pts_in = pts[ins]
    d = poly.distance_to_boundary(pts_in)
    pole = pts_in[int(np.argmax(d))]
    r = float(d.max())
    probes_in = []
    half = r / 6.0
    for sx in (-1, 1):
        for sy in (-1, 1):
            c = pole + np.array([sx * r / 3.0, sy * r / 3.0])
            probes_in.append(_square(c, half))
    hx0, hy0, hx1, hy1 = holdall.bbox
    m = max(8, int(min(hx1 - hx0, hy1 - hy0) / pitch))
    m = min(m, 256)
    gx, gy = np.meshgrid(np.linspace(hx0, hx1, m), np.linspace(hy0, hy1, m), indexing="ij")
    cand = np.column_stack([gx.ravel(), gy.ravel()])
    in_hold = holdall.contains_points(cand)
    cand = cand[in_hold]
    keep = (
        (holdall.distance_to_boundary(cand) >= 2 * pitch)
        & ~poly.contains_points(cand)
        & (poly.distance_to_boundary(cand) >= 2 * pitch)
    )
    cand = cand[keep]
    probes_out = []
    if len(cand):
        for score in (
            cand[:, 0] + cand[:, 1],
            -(cand[:, 0] + cand[:, 1]),
            cand[:, 0] - cand[:, 1],
            cand[:, 1] - cand[:, 0],
        ):
            c = cand[int(np.argmax(score))]
            probes_out.append(_square(c, pitch / 2.0))
    return probes_in, probes_out


def _square(center, half):
    cx, cy = center
    return Polygon(
        np.array(
            [[cx - half, cy - half], [cx + half, cy - half], [cx + half, cy + half], [cx - half, cy + half]]
        )
    )


def sequence_diagnostics(
    seq,
    limit,
    holdall: Polygon,
    *,
    pitch: float | None = None,
    probes: tuple | None = None,
) -> ConvergenceDiagnostics:
    """Tabulates, per member: Hausdorff distance of complements, characteristic-
    function distances (p = 1, 2), weak measure gap, and compact-probe pass indices."""
    limit_dom, limit_mu = limit
    if pitch is None:
        pitch = holdall.diameter / 256.0
    rows = []
    for i, (dom, mu) in enumerate(seq):
        if not polygon_contains(holdall, dom.outer, tol=1e-9):
            raise GeometryError("sequence member escapes hold-all")
        dh = domain_hausdorff_distance(dom, limit_dom, holdall, pitch)
        c1 = char_fn_distance(dom, limit_dom, p=1.0, pitch=pitch)
        c2 = char_fn_distance(dom, limit_dom, p=2.0, pitch=pitch)
        gap = weak_convergence_gap(mu, limit_mu)
        rows.append(
            DiagnosticsRow(
                index=i,
                hausdorff_to_limit=float(dh),
                charfn_p1=float(c1),
                charfn_p2=float(c2),
                measure_gap=float(gap.gap),
                carrier_hausdorff=float(gap.carrier_hausdorff),
            )
        )
    if probes is None:
        probes = default_probes(limit_dom, holdall, pitch)
    compacts = compacts_convergence_check([d for d, _ in seq], limit_dom, probes[0], probes[1])
    return ConvergenceDiagnostics(rows=tuple(rows), compacts=compacts, pitch=pitch)
