"""JSON / CSV / plain-text external interfaces for the core types.

Report JSON is canonical (sorted keys, fixed separators) so reruns are
byte-identical; the only volatile field is the timestamp, isolated in the
header block.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import time
from pathlib import Path

import numpy as np

from .geometry import Polygon, PolygonalDomain, Polyline
from .measures import BoundaryMeasure
from .meshing import Mesh


def polyline_to_json(pl: Polyline):
    return [[float(x), float(y)] for x, y in pl.points]


def polyline_from_json(obj) -> Polyline:
    return Polyline(np.asarray(obj, dtype=np.float64))


def polygon_to_json(p: Polygon):
    return [[float(x), float(y)] for x, y in p.vertices]


def polygon_from_json(obj) -> Polygon:
    return Polygon(np.asarray(obj, dtype=np.float64))


def domain_to_json(dom: PolygonalDomain):
    out = {
        "vertices": polygon_to_json(dom.outer),
        "labels": list(dom.edge_labels),
    }
    if dom.design_region is not None:
        out["design_region"] = polygon_to_json(dom.design_region)
    return out


def domain_from_json(obj) -> PolygonalDomain:
    design = obj.get("design_region")
    return PolygonalDomain(
        polygon_from_json(obj["vertices"]),
        tuple(obj["labels"]),
        design_region=polygon_from_json(design) if design else None,
    )


def measure_to_json(mu: BoundaryMeasure):
    if len(mu.parts) == 1:
        return {
            "carrier": polyline_to_json(mu.parts[0]),
            "densities": [float(d) for d in mu.densities[0]],
        }
    return {
        "carrier": [polyline_to_json(p) for p in mu.parts],
        "densities": [[float(x) for x in d] for d in mu.densities],
    }


def measure_from_json(obj) -> BoundaryMeasure:
    carrier = obj["carrier"]
    if carrier and isinstance(carrier[0][0], (int, float)):
        return BoundaryMeasure(
            (polyline_from_json(carrier),),
            (np.asarray(obj["densities"], dtype=np.float64),),
        )
    return BoundaryMeasure(
        tuple(polyline_from_json(c) for c in carrier),
        tuple(np.asarray(d, dtype=np.float64) for d in obj["densities"]),
    )


def mesh_to_json(mesh: Mesh):
    return {
        "vertices": [[float(x), float(y)] for x, y in mesh.vertices],
        "triangles": mesh.triangles.tolist(),
        "boundary_edges": mesh.boundary_edges.tolist(),
        "boundary_parent": mesh.boundary_parent.tolist(),
        "labels": list(mesh.boundary_labels),
        "h": float(mesh.h),
        "domain": domain_to_json(mesh.domain),
    }


def mesh_to_text(mesh: Mesh) -> str:
    """Line-oriented dump: counts, then vertex / triangle / boundary-edge rows."""
    lines = ["# fracshape mesh: nv nt nb; x y; i j k; i j parent label"]
    lines.append("%d %d %d" % (mesh.n_vertices, mesh.n_triangles, len(mesh.boundary_edges)))
    for x, y in mesh.vertices:
        lines.append("%.17g %.17g" % (x, y))
    for i, j, k in mesh.triangles:
        lines.append("%d %d %d" % (i, j, k))
    for (i, j), par, lab in zip(mesh.boundary_edges, mesh.boundary_parent, mesh.boundary_labels):
        lines.append("%d %d %d %s" % (i, j, par, lab))
    return "\n".join(lines) + "\n"


def field_to_text(mesh: Mesh, values) -> str:
    """Table rows: vertex id, x, y, Re u, Im u."""
    lines = ["# vertex x y re im"]
    for i, ((x, y), v) in enumerate(zip(mesh.vertices, values)):
        lines.append("%d %.17g %.17g %.17g %.17g" % (i, x, y, v.real, v.imag))
    return "\n".join(lines) + "\n"


def to_jsonable(obj):
    """Recursive conversion of dataclasses / numpy values to JSON-safe data."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        out = {}
        for f in dataclasses.fields(obj):
            if f.name.startswith("_"):
                continue
            out[f.name] = to_jsonable(getattr(obj, f.name))
        return out
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, np.ndarray):
        return [to_jsonable(x) for x in obj.tolist()]
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(x) for x in obj]
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if obj is None or isinstance(obj, (str,)):
        return obj
    return repr(obj)


def write_report(path, result, *, header_extra=None) -> None:
    """Canonical JSON with the timestamp isolated in the header block."""
    header = {"tool": "fracshape", "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())}
    if header_extra:
        header.update(header_extra)
    payload = {"header": header, "result": to_jsonable(result)}
    Path(path).write_text(
        json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n"
    )


def write_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in rows:
            writer.writerow(row)


def write_table(path, rows) -> None:
    """Gnuplot-compatible whitespace table."""
    lines = []
    for row in rows:
        lines.append(" ".join(str(x) for x in row))
    Path(path).write_text("\n".join(lines) + "\n")
