"""Command-line surface: gen | verify | solve | mosco | optimize | plot.

One JSON config per run, one output directory, deterministic results for a
fixed (config, seed): reruns produce byte-identical JSON modulo the header
timestamp.  Exit code 0 iff every requested check passed; failing check
names go to stderr.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np
from jsonschema import Draft202012Validator

from . import families, serialization as ser
from .admissibility import (
    ShapeClassParams,
    check_jonsson_admissible,
    check_shape_admissible,
    sequence_diagnostics,
)
from .geometry import GeometryError, Polygon, PolygonalDomain
from .helmholtz import HelmholtzData, solve_helmholtz
from .measures import (
    BoundaryMeasure,
    verify_Ds,
    verify_Ld,
    verify_lower_ahlfors,
    verify_normalized,
    verify_upper_ahlfors,
)
from .meshing import triangulate
from .search import BumpWallFamily, KochWallFamily, minimize_shape
from .variational import mosco_experiment

_NUM = {"type": "number"}
_DATA_SPEC = {
    "oneOf": [
        {"type": "number"},
        {"type": "null"},
        {
            "type": "object",
            "properties": {"const": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}},
            "required": ["const"],
            "additionalProperties": False,
        },
    ]
}
_RECT = {"type": "array", "items": _NUM, "minItems": 4, "maxItems": 4}
_FAMILY = {
    "type": "object",
    "properties": {
        "name": {"enum": ["square", "strip", "disc", "koch_snowflake", "koch_curve", "shrinking_square"]},
        "level": {"type": "integer", "minimum": 0},
        "angle": _NUM,
        "side": _NUM,
        "n_vertices": {"type": "integer", "minimum": 3},
        "m": {"type": "integer", "minimum": 2},
        "labels": {"type": "array", "items": {"enum": ["dir", "neu", "rob"]}},
    },
    "required": ["name"],
    "additionalProperties": False,
}
_CLASS_PARAMS = {
    "type": "object",
    "properties": {
        "holdall": _RECT,
        "kernel": _RECT,
        "eps": _NUM,
        "s": _NUM,
        "d": _NUM,
        "lower_const": _NUM,
        "upper_const": _NUM,
    },
    "required": ["holdall", "kernel", "eps", "s", "d", "lower_const", "upper_const"],
    "additionalProperties": False,
}
_HDATA = {
    "type": "object",
    "properties": {
        "omega": _NUM,
        "alpha": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
        "f": _DATA_SPEC,
        "g": _DATA_SPEC,
        "h": _DATA_SPEC,
    },
    "required": ["omega", "alpha"],
    "additionalProperties": False,
}

SCHEMAS = {
    "gen": {
        "type": "object",
        "properties": {
            "seed": {"type": "integer"},
            "family": _FAMILY,
            "mesh_h": _NUM,
            "measure": {"enum": ["arclength", "natural", None]},
        },
        "required": ["family"],
        "additionalProperties": False,
    },
    "verify": {
        "type": "object",
        "properties": {
            "seed": {"type": "integer"},
            "domain": {
                "type": "object",
                "properties": {"family": _FAMILY, "file": {"type": "string"}},
                "additionalProperties": False,
            },
            "measure": {
                "type": "object",
                "properties": {
                    "kind": {"enum": ["arclength", "natural", "file"]},
                    "density": _NUM,
                    "level": {"type": "integer"},
                    "file": {"type": "string"},
                },
                "required": ["kind"],
                "additionalProperties": False,
            },
            "class_params": _CLASS_PARAMS,
            "jonsson": {
                "type": "object",
                "properties": {"cs": _NUM, "cd": _NUM, "c1_bar": _NUM, "c2": _NUM},
                "required": ["cs", "cd", "c1_bar", "c2"],
                "additionalProperties": False,
            },
            "sweeps": {"type": "object"},
            "eps_opts": {"type": "object"},
        },
        "required": ["domain", "measure", "class_params"],
        "additionalProperties": False,
    },
    "solve": {
        "type": "object",
        "properties": {
            "seed": {"type": "integer"},
            "preset": {"enum": ["strip"]},
            "domain": {
                "type": "object",
                "properties": {"family": _FAMILY, "file": {"type": "string"}},
                "additionalProperties": False,
            },
            "measure": {
                "type": "object",
                "properties": {
                    "kind": {"enum": ["arclength", "natural", "file"]},
                    "density": _NUM,
                    "level": {"type": "integer"},
                    "file": {"type": "string"},
                },
                "additionalProperties": False,
            },
            "h": _NUM,
            "data": _HDATA,
            "method": {"enum": ["lift", "two_step"]},
        },
        "required": ["h"],
        "additionalProperties": False,
    },
    "mosco": {
        "type": "object",
        "properties": {
            "seed": {"type": "integer"},
            "family": {"enum": ["koch", "shrinking_squares"]},
            "levels": {"type": "array", "items": {"type": "integer"}},
            "proxy": {"type": "integer"},
            "ms": {"type": "array", "items": {"type": "integer", "minimum": 2}},
            "limit_m": {"type": "integer"},
            "weights": {"type": "array", "items": _NUM, "minItems": 3, "maxItems": 3},
            "load": _DATA_SPEC,
            "h": _NUM,
            "h_hold": _NUM,
            "holdall": _RECT,
            "require_decreasing": {"type": "boolean"},
        },
        "required": ["family", "weights", "load", "h", "holdall"],
        "additionalProperties": False,
    },
    "optimize": {
        "type": "object",
        "properties": {
            "seed": {"type": "integer"},
            "family": {
                "type": "object",
                "properties": {
                    "name": {"enum": ["bump_wall", "koch_wall"]},
                    "n_knots": {"type": "integer", "minimum": 1},
                    "amplitude": _NUM,
                    "level": {"type": "integer", "minimum": 0},
                    "width": _NUM,
                    "height": _NUM,
                    "wall_x": _NUM,
                },
                "required": ["name"],
                "additionalProperties": False,
            },
            "grid": {"oneOf": [{"type": "integer"}, {"type": "array", "items": {"type": "integer"}}]},
            "strategy": {"enum": ["grid", "coordinate_descent"]},
            "budget": {"type": "integer", "minimum": 1},
            "weights": {"type": "array", "items": _NUM, "minItems": 3, "maxItems": 3},
            "data": _HDATA,
            "class_params": _CLASS_PARAMS,
            "h": _NUM,
        },
        "required": ["family", "grid", "strategy", "budget", "weights", "data", "class_params", "h"],
        "additionalProperties": False,
    },
    "plot": {
        "type": "object",
        "properties": {
            "input": {"type": "string"},
            "columns": {"type": "array", "items": {"type": "string"}},
        },
        "required": ["input"],
        "additionalProperties": False,
    },
}


def _fail_config(err) -> int:
    path = "/".join(str(p) for p in err.absolute_path) or "<root>"
    print("config error at %s: %s" % (path, err.message), file=sys.stderr)
    return 2


def _rect_polygon(spec) -> Polygon:
    x0, y0, x1, y1 = spec
    return families.rectangle(x0, y0, x1, y1)


def _data_spec(obj):
    if obj is None or isinstance(obj, (int, float)):
        return obj
    return complex(obj["const"][0], obj["const"][1])


def _build_family_domain(spec) -> PolygonalDomain:
    name = spec["name"]
    if name == "square":
        return families.square_domain(side=spec.get("side", 1.0))
    if name == "strip":
        return families.strip_domain()
    if name == "disc":
        poly = families.disc_polygon(spec.get("n_vertices", 256), spec.get("side", 0.5))
        return PolygonalDomain(poly, ("neu",) * poly.n_edges)
    if name == "koch_snowflake":
        labels = spec.get("labels", ["rob", "rob", "rob"])
        return families.koch_snowflake_domain(
            spec["level"], spec.get("angle", math.pi / 3), tuple(labels)
        )
    if name == "shrinking_square":
        return families.shrinking_square_domain(spec["m"])
    raise GeometryError("family %r does not define a domain" % name)


def _build_measure(spec, dom: PolygonalDomain) -> BoundaryMeasure:
    kind = spec["kind"]
    if kind == "arclength":
        return BoundaryMeasure.from_polygon(dom.outer, spec.get("density", 1.0))
    if kind == "natural":
        from .measures import natural_prefractal_measure

        return natural_prefractal_measure(dom.outer.boundary_polyline(), spec["level"])
    if kind == "file":
        return ser.measure_from_json(json.loads(Path(spec["file"]).read_text()))
    raise GeometryError("unknown measure kind %r" % kind)


def _load_domain(spec) -> PolygonalDomain:
    if "file" in spec:
        return ser.domain_from_json(json.loads(Path(spec["file"]).read_text()))
    return _build_family_domain(spec["family"])


def _class_params(spec) -> ShapeClassParams:
    return ShapeClassParams(
        holdall=_rect_polygon(spec["holdall"]),
        kernel=_rect_polygon(spec["kernel"]),
        eps=spec["eps"],
        s=spec["s"],
        d=spec["d"],
        lower_const=spec["lower_const"],
        upper_const=spec["upper_const"],
    )


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_gen(config, out: Path, threads: int) -> int:
    fam = config["family"]
    name = fam["name"]
    if name == "koch_curve":
        curve = families.koch_curve(fam["level"], fam.get("angle", math.pi / 3))
        (out / "curve.json").write_text(json.dumps(ser.polyline_to_json(curve)))
        mu = families.koch_curve_measure(fam["level"], fam.get("angle", math.pi / 3))
        (out / "measure.json").write_text(json.dumps(ser.measure_to_json(mu)))
        return 0
    dom = _build_family_domain(fam)
    (out / "domain.json").write_text(json.dumps(ser.domain_to_json(dom)))
    measure_kind = config.get("measure", "arclength")
    if measure_kind == "natural":
        mu = families.natural_prefractal_measure(
            dom.outer.boundary_polyline(), fam.get("level", 0)
        )
    else:
        mu = BoundaryMeasure.from_polygon(dom.outer, 1.0)
    (out / "measure.json").write_text(json.dumps(ser.measure_to_json(mu)))
    if "mesh_h" in config:
        mesh = triangulate(dom, config["mesh_h"])
        (out / "mesh.json").write_text(json.dumps(ser.mesh_to_json(mesh)))
        (out / "mesh.txt").write_text(ser.mesh_to_text(mesh))
    return 0


def cmd_verify(config, out: Path, threads: int) -> int:
    dom = _load_domain(config["domain"])
    mu = _build_measure(config["measure"], dom)
    params = _class_params(config["class_params"])
    sweeps = config.get("sweeps", {})
    eps_opts = config.get("eps_opts", {})
    report = check_shape_admissible(dom, mu, params, eps_opts=eps_opts, sweep_opts=sweeps)
    result = {"shape_admissible": report, "verdict": report.verdict}
    failures = [] if report.verdict else ["shape_admissible"]
    if "jonsson" in config:
        j = config["jonsson"]
        jrep = check_jonsson_admissible(
            dom, mu, params, j["cs"], j["cd"], j["c1_bar"], j["c2"],
            eps_opts=eps_opts, sweep_opts=sweeps,
        )
        result["jonsson_admissible"] = jrep
        if not jrep.verdict:
            failures.append("jonsson_admissible")
    so = dict({"centers": 200, "radii": 40}, **sweeps)
    sweeps_out = {
        "lower_ahlfors": verify_lower_ahlfors(mu, params.s, **so),
        "upper_ahlfors": verify_upper_ahlfors(mu, params.d, **so),
        "Ds": verify_Ds(mu, params.s, **so),
        "Ld": verify_Ld(mu, params.d, **so),
        "normalized": verify_normalized(mu, centers=so["centers"]),
    }
    result["sweeps"] = sweeps_out
    ser.write_report(out / "verify.json", result, header_extra={"threads": threads})
    rows = [["condition", "exponent", "best_constant", "passed"]]
    for name, rep in sweeps_out.items():
        rows.append([name, rep.exponent, rep.best_constant, rep.passed])
    ser.write_csv(out / "sweeps.csv", rows)
    for f in failures:
        print("check failed: %s" % f, file=sys.stderr)
    return 0 if not failures else 1


def _strip_problem(h):
    dom = families.strip_domain()
    mu = BoundaryMeasure.from_polygon(dom.outer)
    data = HelmholtzData(omega=1.0, alpha=1.0 - 1.0j, g=1.0)
    return dom, mu, data


def cmd_solve(config, out: Path, threads: int) -> int:
    if config.get("preset") == "strip":
        dom, mu, data = _strip_problem(config["h"])
    else:
        dom = _load_domain(config["domain"])
        mu = _build_measure(config.get("measure", {"kind": "arclength"}), dom)
        d = config["data"]
        data = HelmholtzData(
            omega=d["omega"],
            alpha=complex(d["alpha"][0], d["alpha"][1]),
            f=_data_spec(d.get("f")),
            g=_data_spec(d.get("g")),
            h=_data_spec(d.get("h")),
        )
    mesh = triangulate(dom, config["h"])
    report = solve_helmholtz(mesh, data, mu, method=config.get("method", "lift"))
    result = {
        "linear_residual": report.linear_residual,
        "energy_identity_defect": report.energy_identity_defect,
        "defect_real": report.defect_real,
        "defect_imag": report.defect_imag,
        "apriori_ratio": report.apriori_ratio,
        "acoustic_energy": report.acoustic_energy,
        "gradient_energy": report.gradient_energy,
        "robin_trace_energy": report.robin_trace_energy,
        "n_vertices": mesh.n_vertices,
        "n_triangles": mesh.n_triangles,
        "method": report.method,
    }
    ser.write_report(out / "solve.json", result, header_extra={"threads": threads})
    (out / "field.txt").write_text(ser.field_to_text(mesh, report.solution.values))
    failures = []
    if report.linear_residual > 1e-8:
        failures.append("linear_residual")
    if report.energy_identity_defect > 1e-10:
        failures.append("energy_identity_defect")
    for f in failures:
        print("check failed: %s" % f, file=sys.stderr)
    return 0 if not failures else 1


def cmd_mosco(config, out: Path, threads: int) -> int:
    holdall = _rect_polygon(config["holdall"])
    load = _data_spec(config["load"])
    weights = tuple(config["weights"])
    if config["family"] == "koch":
        levels = config.get("levels", [1, 2, 3, 4])
        proxy_level = config.get("proxy", max(levels) + 1)
        members = [
            (families.koch_snowflake_domain(m), families.koch_snowflake_measure(m))
            for m in levels
        ]
        proxy = (
            families.koch_snowflake_domain(proxy_level),
            families.koch_snowflake_measure(proxy_level),
        )
    else:
        ms = config.get("ms", [2, 4, 8, 16, 32])
        limit_m = config.get("limit_m")
        members = [
            (families.shrinking_square_domain(m), families.boundary_arclength_measure(families.shrinking_square_domain(m)))
            for m in ms
        ]
        if limit_m is None:
            unit = families.square_domain(labels=("rob",) * 4)
            proxy = (unit, families.boundary_arclength_measure(unit))
        else:
            pd = families.shrinking_square_domain(limit_m)
            proxy = (pd, families.boundary_arclength_measure(pd))
    report = mosco_experiment(
        members, proxy, weights, load, holdall, config["h"], h_hold=config.get("h_hold")
    )
    ser.write_report(out / "mosco.json", report, header_extra={"threads": threads})
    ser.write_csv(out / "mosco.csv", report.csv_rows())
    failures = []
    if config.get("require_decreasing"):
        gaps = [r.gap_to_proxy for r in report.rows]
        if not all(b < a for a, b in zip(gaps, gaps[1:])):
            failures.append("gap_decreasing")
    for f in failures:
        print("check failed: %s" % f, file=sys.stderr)
    return 0 if not failures else 1


def cmd_optimize(config, out: Path, threads: int) -> int:
    fam_spec = config["family"]
    if fam_spec["name"] == "bump_wall":
        family = BumpWallFamily(
            width=fam_spec.get("width", 2.0),
            height=fam_spec.get("height", 1.0),
            wall_x=fam_spec.get("wall_x", 1.5),
            amplitude=fam_spec.get("amplitude", 0.25),
            n_knots=fam_spec.get("n_knots", 3),
        )
    else:
        family = KochWallFamily(
            level=fam_spec.get("level", 2),
            width=fam_spec.get("width", 2.0),
            height=fam_spec.get("height", 1.0),
            wall_x=fam_spec.get("wall_x", 1.4),
        )
    d = config["data"]
    data = HelmholtzData(
        omega=d["omega"],
        alpha=complex(d["alpha"][0], d["alpha"][1]),
        f=_data_spec(d.get("f")),
        g=_data_spec(d.get("g")),
        h=_data_spec(d.get("h")),
    )
    report = minimize_shape(
        family,
        data,
        tuple(config["weights"]),
        _class_params(config["class_params"]),
        strategy=config["strategy"],
        budget=config["budget"],
        grid_counts=config["grid"],
        h=config["h"],
    )
    result = {
        "best_theta": list(report.best_theta),
        "best_J": report.best_J,
        "n_evaluations": len(report.entries),
        "strategy": report.strategy,
        "improvements": [[list(t), j] for t, j in report.improvements],
    }
    ser.write_report(out / "search.json", result, header_extra={"threads": threads})
    ser.write_csv(out / "log.csv", report.csv_rows())
    if report.diagnostics is not None:
        ser.write_csv(out / "diagnostics.csv", report.diagnostics.csv_rows())
    return 0


def cmd_plot(config, out: Path, threads: int) -> int:
    """Re-emit a CSV report as a gnuplot-compatible whitespace table."""
    src = Path(config["input"])
    rows = list(csv.reader(src.open()))
    if not rows:
        print("check failed: empty input", file=sys.stderr)
        return 1
    header = rows[0]
    cols = config.get("columns")
    if cols:
        try:
            sel = [header.index(c) for c in cols]
        except ValueError as exc:
            print("config error: %s" % exc, file=sys.stderr)
            return 2
    else:
        sel = list(range(len(header)))
    table = [["#"] + [header[i] for i in sel]]
    for row in rows[1:]:
        table.append([row[i] for i in sel])
    ser.write_table(out / (src.stem + ".dat"), table)
    return 0


COMMANDS = {
    "gen": cmd_gen,
    "verify": cmd_verify,
    "solve": cmd_solve,
    "mosco": cmd_mosco,
    "optimize": cmd_optimize,
    "plot": cmd_plot,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fracshape",
        description="uniform prefractal domains, boundary measures, Helmholtz shape experiments",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="path to the JSON run config")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--threads", type=int, default=1, help="worker threads (results are canonical regardless)")
    args = parser.parse_args(argv)
    try:
        config = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2
    validator = Draft202012Validator(SCHEMAS[args.command])
    errors = sorted(validator.iter_errors(config), key=lambda e: list(e.absolute_path))
    if errors:
        return _fail_config(errors[0])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        return COMMANDS[args.command](config, out, args.threads)
    except (GeometryError, ValueError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
