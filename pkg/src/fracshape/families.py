"""Named generator families used by experiments, tests and the CLI."""
from __future__ import annotations

import math

import numpy as np

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
from .measures import BoundaryMeasure, natural_prefractal_measure


def rectangle(x0: float, y0: float, x1: float, y1: float) -> Polygon:
    if not (x1 > x0 and y1 > y0):
        raise GeometryError("degenerate rectangle")
    return Polygon(np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]]))


def square_domain(side: float = 1.0, labels=(NEUMANN, NEUMANN, NEUMANN, NEUMANN)) -> PolygonalDomain:
    return PolygonalDomain(rectangle(0.0, 0.0, side, side), labels)


def strip_domain() -> PolygonalDomain:
    """Unit square: Dirichlet left, Neumann top/bottom, Robin right."""
    return PolygonalDomain(rectangle(0.0, 0.0, 1.0, 1.0), (NEUMANN, ROBIN, NEUMANN, DIRICHLET))


def disc_polygon(n_vertices: int = 256, radius: float = 0.5, center=(0.0, 0.0)) -> Polygon:
    t = 2.0 * math.pi * np.arange(n_vertices) / n_vertices
    pts = np.column_stack([center[0] + radius * np.cos(t), center[1] + radius * np.sin(t)])
    return Polygon(pts)


def koch_curve(level: int, bump_angle: float = math.pi / 3) -> Polyline:
    """Koch prefractal over the unit base segment (0,0)-(1,0), bumps upward."""
    base = Polyline(np.array([[0.0, 0.0], [1.0, 0.0]]))
    return koch_prefractal(base, level, bump_angle)


def koch_curve_measure(level: int, bump_angle: float = math.pi / 3) -> BoundaryMeasure:
    """Natural self-similar measure on the unit-base Koch curve (total mass 1)."""
    return natural_prefractal_measure(koch_curve(level, bump_angle), level)


def _koch_side_outward(a, b, level: int, bump_angle: float) -> np.ndarray:
    # generator bumps left of the direction of travel; traversing b->a and
    # reversing yields a->b with bumps on the right, i.e. outward for CCW
    pl = koch_prefractal(Polyline(np.array([b, a], dtype=np.float64)), level, bump_angle)
    return pl.points[::-1]


def koch_snowflake(level: int, bump_angle: float = math.pi / 3, side: float = 1.0) -> Polygon:
    """Equilateral-base snowflake, bumps outward, counterclockwise."""
    h = side * math.sqrt(3.0) / 2.0
    tri = [np.array([0.0, 0.0]), np.array([side, 0.0]), np.array([side / 2.0, h])]
    chain = []
    for i in range(3):
        a, b = tri[i], tri[(i + 1) % 3]
        pts = _koch_side_outward(a, b, level, bump_angle)
        chain.append(pts[:-1])
    return Polygon(np.vstack(chain))


def koch_snowflake_domain(
    level: int,
    bump_angle: float = math.pi / 3,
    side_labels=(ROBIN, ROBIN, ROBIN),
) -> PolygonalDomain:
    """Snowflake with one label per original triangle side, inherited by all sub-edges."""
    poly = koch_snowflake(level, bump_angle)
    per_side = poly.n_edges // 3
    labels = tuple(side_labels[i // per_side] for i in range(poly.n_edges))
    return PolygonalDomain(poly, labels)


def koch_snowflake_measure(level: int, bump_angle: float = math.pi / 3) -> BoundaryMeasure:
    """Natural weights on the snowflake boundary: each edge carries 4^-level (total 3)."""
    poly = koch_snowflake(level, bump_angle)
    return natural_prefractal_measure(poly.boundary_polyline(), level)


def shrinking_square_domain(m: int, labels=(ROBIN, ROBIN, ROBIN, ROBIN)) -> PolygonalDomain:
    """(0, 1 - 1/m)^2 member of the shrinking-squares control family."""
    if m < 2:
        raise GeometryError("need m >= 2")
    side = 1.0 - 1.0 / m
    return PolygonalDomain(rectangle(0.0, 0.0, side, side), labels)


def boundary_arclength_measure(dom: PolygonalDomain, density: float = 1.0) -> BoundaryMeasure:
    return BoundaryMeasure.from_polygon(dom.outer, density)
