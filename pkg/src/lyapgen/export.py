"""Artifact writers: CSV tables, the Morse graph, the report and a gnuplot script.

All numbers are written with 17 significant digits so doubles round-trip.
Files are opened with ``newline="\\n"`` to keep LF line endings everywhere.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .chainrec import morse_graph_dot
from .lyapunov_lift import lift_many
from .pipeline import Analysis
from .verification import VerificationReport

MAP_CSV = "lyapunov_map.csv"
SEMIFLOW_CSV = "lyapunov_semiflow.csv"
MORSE_DOT = "morse_graph.dot"
REPORT_JSON = "report.json"
PLOT_GP = "plot.gp"
EDGES_TXT = "edges.txt"

LIFT_BATCH = 4096


def fmt(x) -> str:
    return "%.17g" % x


def _write(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def map_table(an: Analysis) -> str:
    """One row per box, ordered by box id."""
    grid, a = an.grid, an.assignment
    n = grid.dim
    ids = np.arange(grid.n_boxes)
    coords = grid.coords(ids)
    lo, hi = grid.box_bounds(ids)
    comp = np.where(a.box_recurrent, a.box_component, -1)
    head = (
        ["box_id"]
        + [f"i{j + 1}" for j in range(n)]
        + [f"lo{j + 1}" for j in range(n)]
        + [f"hi{j + 1}" for j in range(n)]
        + ["value", "tag", "exiting", "component"]
    )
    rows = [",".join(head)]
    for b in ids:
        fields = [str(b)]
        fields += [str(int(c)) for c in coords[b]]
        fields += [fmt(v) for v in lo[b]]
        fields += [fmt(v) for v in hi[b]]
        fields += [fmt(a.box_value[b]), a.tag(b), str(int(a.box_exiting[b])), str(int(comp[b]))]
        rows.append(",".join(fields))
    return "\n".join(rows) + "\n"


def evaluation_lattice(an: Analysis) -> np.ndarray:
    """Cell midpoints of a regular lattice with ``resolution`` points per axis, row-major."""
    r = an.config.resolution
    lower, upper = np.asarray(an.grid.lower), np.asarray(an.grid.upper)
    axes = [lower[j] + (np.arange(r) + 0.5) / r * (upper[j] - lower[j]) for j in range(an.grid.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


def semiflow_table(an: Analysis) -> str:
    pts = evaluation_lattice(an)
    vals = np.concatenate(
        [
            lift_many(an.assignment, an.system, pts[i : i + LIFT_BATCH], an.lift_config)
            for i in range(0, len(pts), LIFT_BATCH)
        ]
    )
    boxes = an.grid.locate_many(pts)
    n = an.grid.dim
    rows = [",".join([f"x{j + 1}" for j in range(n)] + ["L", "box_id"])]
    for p, v, b in zip(pts, vals, boxes):
        rows.append(",".join([fmt(c) for c in p] + [fmt(v), str(int(b))]))
    return "\n".join(rows) + "\n"


def plot_script(an: Analysis) -> str:
    n = an.grid.dim
    lines = ["# gnuplot script; run with: gnuplot plot.gp", 'set datafile separator ","']
    if an.config.is_ode:
        src = SEMIFLOW_CSV
        if n == 1:
            lines += [
                'set terminal pngcairo size 900,600',
                'set output "lyapunov.png"',
                'set xlabel "x1"',
                'set ylabel "value"',
                'set key top left',
                f'plot "{src}" every ::1 using 1:2 with lines lw 2 title "L", \\',
                f'     "{MAP_CSV}" every ::1 using (($3+$4)/2):5 with steps title "ell"',
            ]
        else:
            lines += [
                'set terminal pngcairo size 900,800',
                'set output "lyapunov.png"',
                'set xlabel "x1"',
                'set ylabel "x2"',
                "set view map",
                'set palette rgbformulae 33,13,10',
                f'plot "{src}" every ::1 using 1:2:3 with image title "L"',
            ]
    else:
        if n == 1:
            lines += [
                'set terminal pngcairo size 900,600',
                'set output "lyapunov.png"',
                'set xlabel "x1"',
                'set ylabel "ell"',
                f'plot "{MAP_CSV}" every ::1 using (($3+$4)/2):5 with steps title "ell"',
            ]
        else:
            lines += [
                'set terminal pngcairo size 900,800',
                'set output "lyapunov.png"',
                'set xlabel "x1"',
                'set ylabel "x2"',
                "set view map",
                'set palette rgbformulae 33,13,10',
                f'plot "{MAP_CSV}" every ::1 using (($4+$6)/2):(($5+$7)/2):8 with image title "ell"',
            ]
    if n > 2:
        lines = [
            "# plots cover one- and two-dimensional systems only",
            f"# data: {MAP_CSV}" + (f", {SEMIFLOW_CSV}" if an.config.is_ode else ""),
        ]
    return "\n".join(lines) + "\n"


def report_schema() -> dict:
    text = resources.files("lyapgen").joinpath("schemas/report.schema.json").read_text()
    return json.loads(text)


def report_json(report: VerificationReport) -> str:
    doc = report.to_dict()
    jsonschema.validate(doc, report_schema())
    return json.dumps(doc, indent=2) + "\n"


def write_report(report: VerificationReport, out: Path) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / REPORT_JSON
    _write(path, report_json(report))
    return path


def write_artifacts(an: Analysis, report: VerificationReport, out: Path) -> list:
    """Write every artifact into ``out``; returns the paths written, in order."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def put(name, text):
        _write(out / name, text)
        written.append(out / name)

    put(MORSE_DOT, morse_graph_dot(an.morse))
    put(MAP_CSV, map_table(an))
    if an.config.is_ode:
        put(SEMIFLOW_CSV, semiflow_table(an))
    if an.config.export_edges:
        put(EDGES_TXT, an.graph.edge_list_text())
    put(PLOT_GP, plot_script(an))
    written.append(write_report(report, out))
    return written
