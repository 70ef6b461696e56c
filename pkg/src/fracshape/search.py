"""Minimizing-sequence search for the acoustic objective over wall families.

The chamber is a rectangle with a Dirichlet source wall on the left, Neumann
top/bottom, and a parametrized Robin absorber wall on the right living inside
the design region.  Strategies: exhaustive lattice (with a brute-force oracle
guarantee) and cyclic golden-section coordinate descent from the lattice best.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .admissibility import (
    AdmissibilityReport,
    ShapeClassParams,
    check_shape_admissible,
    sequence_diagnostics,
)
from .geometry import (
    DIRICHLET,
    NEUMANN,
    ROBIN,
    GeometryError,
    Polygon,
    PolygonalDomain,
    Polyline,
    koch_prefractal,
)
from .families import rectangle
from .helmholtz import HelmholtzData, solve_helmholtz
from .measures import BoundaryMeasure
from .meshing import triangulate

_GOLD = (math.sqrt(5.0) - 1.0) / 2.0


class ShapeFamily:
    """Parametrized Robin-wall family; subclasses build (domain, measure) from theta."""

    dim: int

    def box(self):
        raise NotImplementedError

    def build(self, theta):
        raise NotImplementedError

    def lattice(self, counts):
        lo, hi = self.box()
        counts = np.broadcast_to(np.asarray(counts, dtype=int), (self.dim,))
        axes = [np.linspace(lo[k], hi[k], counts[k]) for k in range(self.dim)]
        return [tuple(t) for t in itertools.product(*axes)]


@dataclass(frozen=True, eq=False)
class BumpWallFamily(ShapeFamily):
    """Right wall with n_knots knot offsets in [-amplitude, amplitude]."""

    width: float = 2.0
    height: float = 1.0
    wall_x: float = 1.5
    amplitude: float = 0.25
    n_knots: int = 3
    density: float = 1.0

    def __post_init__(self):
        if not (0 < self.wall_x - self.amplitude and self.wall_x + self.amplitude < self.width):
            raise GeometryError("wall excursion must stay inside the chamber width")

    @property
    def dim(self) -> int:
        return self.n_knots

    def box(self):
        k = self.n_knots
        return -self.amplitude * np.ones(k), self.amplitude * np.ones(k)

    def wall_points(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=np.float64)
        ys = np.linspace(0.0, self.height, self.n_knots + 2)
        xs = np.concatenate([[self.wall_x], self.wall_x + theta, [self.wall_x]])
        return np.column_stack([xs, ys])

    def build(self, theta):
        wall = self.wall_points(theta)
        verts = np.vstack(
            [
                [[0.0, 0.0]],
                wall,
                [[0.0, self.height]],
            ]
        )
        labels = (
            [NEUMANN]
            + [ROBIN] * (self.n_knots + 1)
            + [NEUMANN, DIRICHLET]
        )
        margin = 0.05 * self.width
        design = rectangle(
            self.wall_x - self.amplitude - margin,
            -margin,
            self.wall_x + self.amplitude + margin,
            self.height + margin,
        )
        dom = PolygonalDomain(Polygon(verts), tuple(labels), design_region=design)
        mu = BoundaryMeasure.from_polygon(dom.outer, self.density)
        return dom, mu


@dataclass(frozen=True, eq=False)
class KochWallFamily(ShapeFamily):
    """Right wall replaced by an outward Koch prefractal; theta = (bump_angle,).

    The wall carries natural prefractal weights (each level-m edge has mass
    height * 4^-m); the straight walls carry arclength density 1.
    """

    level: int = 2
    width: float = 2.0
    height: float = 1.0
    wall_x: float = 1.4
    angle_lo: float = 0.45
    angle_hi: float = 1.35

    @property
    def dim(self) -> int:
        return 1

    def box(self):
        return np.array([self.angle_lo]), np.array([self.angle_hi])

    def build(self, theta):
        (angle,) = tuple(theta)
        a = np.array([self.wall_x, 0.0])
        b = np.array([self.wall_x, self.height])
        # generator bumps left of travel; build on b->a and reverse so the
        # bumps point outward (+x), into the absorber region
        wall = koch_prefractal(Polyline(np.array([b, a])), self.level, float(angle)).points[::-1]
        apex_reach = float(wall[:, 0].max() - self.wall_x)
        if self.wall_x + apex_reach >= self.width:
            raise GeometryError("koch wall escapes the chamber")
        verts = np.vstack([[[0.0, 0.0]], wall, [[0.0, self.height]]])
        n_wall = len(wall) - 1
        labels = [NEUMANN] + [ROBIN] * n_wall + [NEUMANN, DIRICHLET]
        margin = 0.05 * self.width
        design = rectangle(
            self.wall_x - margin,
            -margin,
            self.wall_x + apex_reach + margin,
            self.height + margin,
        )
        dom = PolygonalDomain(Polygon(verts), tuple(labels), design_region=design)
        carrier = dom.outer.boundary_polyline()
        seglen = np.diff(carrier.cumlen)
        dens = np.ones(len(seglen))
        wall_mass = self.height * 4.0 ** (-self.level)
        dens[1 : 1 + n_wall] = wall_mass / seglen[1 : 1 + n_wall]
        mu = BoundaryMeasure((carrier,), (dens,))
        return dom, mu


# ---------------------------------------------------------------------------
# evaluation and search
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ShapeEvaluation:
    theta: tuple
    J: float
    admissibility: AdmissibilityReport
    solve_report: object

    @property
    def admissible(self) -> bool:
        return self.admissibility.verdict


_SEARCH_EPS_OPTS = {
    "pair_grid": 5,
    "curve_family": "both",
    "n_samples": 33,
    "grid_divisions": 96,
}
_SEARCH_SWEEP_OPTS = {"centers": 100, "radii": 24}


def evaluate_shape(
    family: ShapeFamily,
    theta,
    data: HelmholtzData,
    weights,
    class_params: ShapeClassParams,
    *,
    h: float = 0.1,
    eps_opts: dict | None = None,
    sweep_opts: dict | None = None,
) -> ShapeEvaluation:
    """Build Omega(theta), check admissibility, mesh, solve, and score J."""
    lo, hi = family.box()
    theta = tuple(float(t) for t in theta)
    if np.any(np.asarray(theta) < lo - 1e-12) or np.any(np.asarray(theta) > hi + 1e-12):
        raise GeometryError("theta outside the parameter box")
    dom, mu = family.build(theta)
    adm = check_shape_admissible(
        dom,
        mu,
        class_params,
        eps_opts=dict(_SEARCH_EPS_OPTS, **(eps_opts or {})),
        sweep_opts=dict(_SEARCH_SWEEP_OPTS, **(sweep_opts or {})),
    )
    mesh = triangulate(dom, h)
    rep = solve_helmholtz(mesh, data, mu)
    A_, B_, C_ = weights
    J = A_ * rep.acoustic_energy + B_ * rep.gradient_energy + C_ * rep.robin_trace_energy
    return ShapeEvaluation(theta=theta, J=float(J), admissibility=adm, solve_report=rep)


@dataclass(frozen=True)
class SearchEntry:
    theta: tuple
    J: float | None
    admissible: bool
    phase: str  # "grid" | "descent"


@dataclass(frozen=True, eq=False)
class SearchReport:
    entries: tuple
    best_theta: tuple
    best_J: float
    improvements: tuple  # (theta, J) pairs, best-so-far sequence
    diagnostics: object
    strategy: str

    def csv_rows(self):
        dim = len(self.best_theta)
        yield ["phase"] + ["theta%d" % k for k in range(dim)] + ["J", "admissible"]
        for e in self.entries:
            yield [e.phase, *e.theta, "" if e.J is None else e.J, int(e.admissible)]


def minimize_shape(
    family: ShapeFamily,
    data: HelmholtzData,
    weights,
    class_params: ShapeClassParams,
    strategy: str = "grid",
    budget: int = 1000,
    *,
    grid_counts=9,
    h: float = 0.1,
    eps_opts: dict | None = None,
    sweep_opts: dict | None = None,
    diagnostics_pitch: float | None = None,
    with_diagnostics: bool = True,
) -> SearchReport:
    """Exhaustive lattice search, optionally followed by coordinate descent.

    The grid phase returns exactly the lattice minimum over admissible
    iterates (ties broken by lexicographically smallest theta); descent never
    returns a worse value than the grid best.
    """
    if budget < 1:
        raise GeometryError("budget must be >= 1")
    if strategy not in ("grid", "coordinate_descent"):
        raise GeometryError("unknown strategy %r" % strategy)
    lattice = family.lattice(grid_counts)
    if len(lattice) > budget:
        raise GeometryError("budget too small for the declared lattice")
    entries = []
    improvements = []
    best_theta = None
    best_J = math.inf
    evals = 0

    def run(theta, phase):
        nonlocal best_theta, best_J, evals
        evals += 1
        try:
            ev = evaluate_shape(
                family, theta, data, weights, class_params,
                h=h, eps_opts=eps_opts, sweep_opts=sweep_opts,
            )
        except GeometryError:
            entries.append(SearchEntry(theta=tuple(theta), J=None, admissible=False, phase=phase))
            return None
        entries.append(
            SearchEntry(theta=ev.theta, J=ev.J, admissible=ev.admissible, phase=phase)
        )
        if ev.admissible and ev.J < best_J:
            best_J = ev.J
            best_theta = ev.theta
            improvements.append((ev.theta, ev.J))
        return ev

    for theta in lattice:
        run(theta, "grid")
    if best_theta is None:
        raise GeometryError("empty admissible set at this resolution")

    if strategy == "coordinate_descent":
        lo, hi = family.box()
        improved = True
        while improved and evals < budget:
            cycle_start_J = best_J
            for k in range(family.dim):
                if evals >= budget:
                    break
                a, b = float(lo[k]), float(hi[k])
                # golden-section on coordinate k through the current best
                x1 = b - _GOLD * (b - a)
                x2 = a + _GOLD * (b - a)
                span0 = b - a
                while (b - a) > 1e-3 * span0 and evals < budget:
                    vals = []
                    for x in (x1, x2):
                        th = list(best_theta)
                        th[k] = x
                        ev = run(tuple(th), "descent")
                        vals.append(ev.J if ev is not None and ev.admissible else math.inf)
                    if vals[0] <= vals[1]:
                        b, x2 = x2, x1
                        x1 = b - _GOLD * (b - a)
                    else:
                        a, x1 = x1, x2
                        x2 = a + _GOLD * (b - a)
            improved = best_J < cycle_start_J - 1e-15

    diagnostics = None
    if with_diagnostics and len(improvements) >= 1:
        doms = [family.build(th) for th, _ in improvements]
        limit = family.build(best_theta)
        diagnostics = sequence_diagnostics(
            doms,
            limit,
            class_params.holdall,
            pitch=diagnostics_pitch,
        )
    return SearchReport(
        entries=tuple(entries),
        best_theta=best_theta,
        best_J=best_J,
        improvements=tuple(improvements),
        diagnostics=diagnostics,
        strategy=strategy,
    )
