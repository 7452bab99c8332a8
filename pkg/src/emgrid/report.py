"""Machine-readable reports and heatmap rendering.

Outputs written by emit_reports:

    result.json        full simulation result + run manifest (schema below)
    mortal_wires.csv   tree_id, segment_id, t_nuc_s, t_inc_s, t_growth_s,
                       t_life_s, censored
    ir_timeseries.csv  time_s, net, ir_max_v, ir_p95_v
    ir_timeseries.png  matplotlib plot of max IR drop per net over time
    current_density.svg, temperature.svg, stress_final.svg, ir_drop.svg

All numeric JSON/CSV fields are SI with the unit suffixed in the key
(_s, _v, _pa, _m3, _a_m2); lengths in the geometry block are micrometers
(_um) to match the input files.  Floats are written at 9 significant
digits and orderings are fixed, so reports are deterministic for a given
manifest.

SVG affine transform (documented contract, exercised by tests): with the
world bounding box [xmin, xmax] x [ymin, ymax] in micrometers, canvas
width CANVAS_W and margin MARGIN,

    scale = (CANVAS_W - 2*MARGIN) / (xmax - xmin)
    X(x)  = MARGIN + (x - xmin) * scale
    Y(y)  = MARGIN + (ymax - y) * scale          (y axis flips)

and the viewBox is "0 0 CANVAS_W (2*MARGIN + (ymax-ymin)*scale)".
Rendering from result.json is pure: it never re-runs the simulation.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .constants import UM
from .errors import ConfigError
from .grid import PowerGrid
from .sim import SimulationConfig, SimulationResult

SCHEMA_VERSION = "1.0"
CANVAS_W = 800.0
MARGIN = 40.0


def _f(x) -> float:
    """Round to 9 significant digits for stable serialization."""
    if x is None:
        return None
    return float(f"{float(x):.9g}")


def _fmt(x) -> str:
    return f"{float(x):.9g}"


def _jsonify(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return _f(obj)
    if isinstance(obj, (int, np.integer, bool)) or obj is None:
        return obj
    return obj


def build_manifest(input_paths: dict[str, str], parameters: dict) -> dict:
    """Run manifest: input hashes and mtimes, resolved parameters, version.

    Timestamps are the input files' modification times (UTC), not the
    wall clock, so identical invocations produce identical reports.
    """
    inputs = []
    for role in sorted(input_paths):
        path = input_paths[role]
        with open(path, "rb") as fh:
            digest = hashlib.sha256(fh.read()).hexdigest()
        mtime = datetime.fromtimestamp(os.stat(path).st_mtime,
                                       tz=timezone.utc).isoformat()
        inputs.append({"role": role, "path": os.path.abspath(path),
                       "sha256": digest, "timestamp": mtime})
    return {"tool_version": __version__, "inputs": inputs,
            "parameters": _jsonify(parameters)}


def result_document(result: SimulationResult, grid: PowerGrid,
                    cfg: SimulationConfig, manifest: dict) -> dict:
    trees = []
    for rec in result.trees:
        entry = {"id": rec.tree_id, "mortal": rec.mortal,
                 "steady_max_sigma_pa": _f(rec.steady_max_sigma),
                 "nuc_segment": rec.nuc_segment}
        entry.update({k + ("_s" if k.startswith("t_") else ""): _jsonify(v)
                      for k, v in rec.ttf(result.t_total).items()})
        trees.append(entry)

    checkpoints = [{
        "time_s": _f(c.time),
        "ir_max_v": _jsonify(c.ir_max),
        "ir_p95_v": _jsonify(c.ir_p95),
        "resistance_ohm": _jsonify(c.resistance),
        "tree_max_sigma_pa": _jsonify(c.tree_max_sigma),
        "void_volume_m3": _jsonify(c.void_volumes),
    } for c in result.checkpoints]

    geometry = {
        "nodes": [{"id": n.id, "name": n.name, "x_um": _f(n.x / UM),
                   "y_um": _f(n.y / UM), "layer": n.layer, "net": n.net,
                   "kind": n.kind}
                  for n in (grid.nodes[k] for k in sorted(grid.nodes))],
        "segments": [{"id": s.id, "name": s.name, "n1": s.n1, "n2": s.n2,
                      "layer": s.layer, "w_um": _f(s.width / UM),
                      "h_um": _f(s.thickness / UM), "l_um": _f(s.length / UM),
                      "r0_ohm": _f(s.r0)}
                     for s in (grid.segments[k] for k in sorted(grid.segments))],
        "pads_v": _jsonify({nid: grid.pads[nid] for nid in sorted(grid.pads)}),
        "loads_a": _jsonify({nid: grid.loads[nid] for nid in sorted(grid.loads)}),
    }

    fields = {
        "final_drop_v": _jsonify({nid: result.final_drops[nid]
                                  for nid in sorted(result.final_drops)}),
        "final_density_a_m2": _jsonify({sid: result.final_densities[sid]
                                        for sid in sorted(result.final_densities)}),
        "tree_stress": [{
            "tree": tid,
            "x_um": _jsonify(result.tree_coords[tid][:, 0] / UM),
            "y_um": _jsonify(result.tree_coords[tid][:, 1] / UM),
            "temp_k": _jsonify(result.tree_temps[tid]),
            "sigma_pa": _jsonify(result.final_sigma[tid]),
        } for tid in sorted(result.final_sigma)],
    }

    return {
        "schema_version": SCHEMA_VERSION,
        "manifest": manifest,
        "config": {
            "thermal_mode": "map" if cfg.thermal_map is not None else "joule_only",
            "map_includes_joule": cfg.map_includes_joule,
            "ambient_k": _f(cfg.ambient) if cfg.ambient is not None else None,
        },
        "chip": {
            "lifetime_s": _f(result.chip_lifetime),
            "failed": result.chip_failed,
            "censored": not result.chip_failed,
            "t_total_s": _f(result.t_total),
            "final_time_s": _f(result.final_time),
            "tree_count": len(result.trees),
            "mortal_trees": result.mortal_count,
            "void_clamp_counts": _jsonify(result.clamp_counts),
        },
        "trees": trees,
        "checkpoints": checkpoints,
        "geometry": geometry,
        "fields": fields,
    }


def load_result_document(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    version = str(doc.get("schema_version", ""))
    if version.split(".")[0] != SCHEMA_VERSION.split(".")[0]:
        raise ConfigError(f"unsupported result schema {version!r}")
    return doc


def emit_reports(result: SimulationResult, grid: PowerGrid,
                 cfg: SimulationConfig, manifest: dict, outdir: str) -> list[str]:
    """Write all report files; returns the written paths."""
    os.makedirs(outdir, exist_ok=True)
    if not os.access(outdir, os.W_OK):
        raise ConfigError(f"output directory {outdir!r} is not writable")
    doc = result_document(result, grid, cfg, manifest)
    written = []

    path = os.path.join(outdir, "result.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
    written.append(path)

    path = os.path.join(outdir, "mortal_wires.csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["tree_id", "segment_id", "t_nuc_s", "t_inc_s",
                    "t_growth_s", "t_life_s", "censored"])
        for rec in result.trees:
            if not rec.mortal:
                continue
            ttf = rec.ttf(result.t_total)
            w.writerow([rec.tree_id, rec.nuc_segment]
                       + ["" if ttf[k] is None else _fmt(ttf[k])
                          for k in ("t_nuc", "t_inc", "t_growth", "t_life")]
                       + [ttf["censored"]])
    written.append(path)

    path = os.path.join(outdir, "ir_timeseries.csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["time_s", "net", "ir_max_v", "ir_p95_v"])
        for c in result.checkpoints:
            for net in sorted(c.ir_max):
                w.writerow([_fmt(c.time), net, _fmt(c.ir_max[net]),
                            _fmt(c.ir_p95[net])])
    written.append(path)

    written += render_heatmaps(doc, outdir)
    written.append(render_timeseries_figure(doc, outdir))
    return written


# ---------------------------------------------------------------- rendering

def _world_bbox(doc: dict) -> tuple[float, float, float, float]:
    xs, ys = [], []
    for n in doc["geometry"]["nodes"]:
        xs.append(n["x_um"])
        ys.append(n["y_um"])
    for t in doc["fields"]["tree_stress"]:
        xs.extend(t["x_um"])
        ys.extend(t["y_um"])
    return min(xs), max(xs), min(ys), max(ys)


def svg_transform(bbox: tuple[float, float, float, float]):
    """Returns (to_canvas, canvas_height) for the documented transform."""
    xmin, xmax, ymin, ymax = bbox
    scale = (CANVAS_W - 2 * MARGIN) / (xmax - xmin) if xmax > xmin else 1.0
    height = 2 * MARGIN + (ymax - ymin) * scale

    def to_canvas(x: float, y: float) -> tuple[float, float]:
        return MARGIN + (x - xmin) * scale, MARGIN + (ymax - y) * scale

    return to_canvas, height


def _color(t: float) -> str:
    """Blue -> red linear ramp; t clamped to [0, 1]."""
    t = min(max(t, 0.0), 1.0)
    r = int(round(255 * t))
    b = int(round(255 * (1.0 - t)))
    g = int(round(64 * (1.0 - abs(2 * t - 1))))
    return f"#{r:02x}{g:02x}{b:02x}"


def _svg(path: str, height: float, body: list[str], title: str,
         vmin: float, vmax: float, unit: str) -> None:
    head = [
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'viewBox="0 0 {_fmt(CANVAS_W)} {_fmt(height)}">',
        f'<rect width="{_fmt(CANVAS_W)}" height="{_fmt(height)}" fill="white"/>',
        f'<text x="8" y="16" font-size="12" font-family="sans-serif">{title}'
        f' [{_fmt(vmin)} .. {_fmt(vmax)} {unit}]</text>',
    ]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(head + body + ["</svg>"]) + "\n")


def _segment_lines(doc: dict, to_canvas, values: dict[int, float] | None,
                   vmin=0.0, vmax=1.0) -> list[str]:
    nodes = {n["id"]: n for n in doc["geometry"]["nodes"]}
    body = []
    for s in doc["geometry"]["segments"]:
        a, b = nodes[s["n1"]], nodes[s["n2"]]
        x1, y1 = to_canvas(a["x_um"], a["y_um"])
        x2, y2 = to_canvas(b["x_um"], b["y_um"])
        if values is None:
            color, width = "#cccccc", 1.0
        else:
            v = values.get(s["id"], 0.0)
            span = (vmax - vmin) or 1.0
            color, width = _color((v - vmin) / span), 3.0
        body.append(f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" '
                    f'y2="{_fmt(y2)}" stroke="{color}" '
                    f'stroke-width="{_fmt(width)}"/>')
    return body


def _point_cloud(to_canvas, xs, ys, vals, vmin, vmax) -> list[str]:
    span = (vmax - vmin) or 1.0
    body = []
    for x, y, v in zip(xs, ys, vals):
        cx, cy = to_canvas(x, y)
        body.append(f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="2.5" '
                    f'fill="{_color((v - vmin) / span)}"/>')
    return body


def render_heatmaps(doc: dict, outdir: str) -> list[str]:
    """Write the four SVG heatmaps from a result document (pure)."""
    to_canvas, height = svg_transform(_world_bbox(doc))
    written = []

    dens = {int(k): abs(v) for k, v in doc["fields"]["final_density_a_m2"].items()}
    vmin, vmax = (min(dens.values()), max(dens.values())) if dens else (0, 1)
    path = os.path.join(outdir, "current_density.svg")
    _svg(path, height, _segment_lines(doc, to_canvas, dens, vmin, vmax),
         "final current density", vmin, vmax, "A/m^2")
    written.append(path)

    all_t = [v for t in doc["fields"]["tree_stress"] for v in t["temp_k"]]
    vmin, vmax = (min(all_t), max(all_t)) if all_t else (0, 1)
    body = _segment_lines(doc, to_canvas, None)
    for t in doc["fields"]["tree_stress"]:
        body += _point_cloud(to_canvas, t["x_um"], t["y_um"], t["temp_k"],
                             vmin, vmax)
    path = os.path.join(outdir, "temperature.svg")
    _svg(path, height, body, "wire temperature", vmin, vmax, "K")
    written.append(path)

    all_s = [v for t in doc["fields"]["tree_stress"] for v in t["sigma_pa"]]
    vmin, vmax = (min(all_s), max(all_s)) if all_s else (0, 1)
    body = _segment_lines(doc, to_canvas, None)
    for t in doc["fields"]["tree_stress"]:
        body += _point_cloud(to_canvas, t["x_um"], t["y_um"], t["sigma_pa"],
                             vmin, vmax)
    path = os.path.join(outdir, "stress_final.svg")
    _svg(path, height, body, "stress at final time", vmin, vmax, "Pa")
    written.append(path)

    drops = {int(k): v for k, v in doc["fields"]["final_drop_v"].items()}
    vmin, vmax = (min(drops.values()), max(drops.values())) if drops else (0, 1)
    span = (vmax - vmin) or 1.0
    body = _segment_lines(doc, to_canvas, None)
    for n in doc["geometry"]["nodes"]:
        if n["id"] not in drops:
            continue
        cx, cy = to_canvas(n["x_um"], n["y_um"])
        body.append(f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="4" '
                    f'fill="{_color((drops[n["id"]] - vmin) / span)}"/>')
    path = os.path.join(outdir, "ir_drop.svg")
    _svg(path, height, body, "final IR drop", vmin, vmax, "V")
    written.append(path)
    return written


def render_timeseries_figure(doc: dict, outdir: str) -> str:
    """Matplotlib plot of max IR drop per net over time."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    series: dict[str, tuple[list, list]] = {}
    for c in doc["checkpoints"]:
        for net, v in c["ir_max_v"].items():
            series.setdefault(net, ([], []))[0].append(c["time_s"])
            series[net][1].append(v)
    fig, ax = plt.subplots(figsize=(7, 4))
    for net in sorted(series):
        ts, vs = series[net]
        ax.plot(ts, vs, marker=".", label=net)
    positive = [t for ts, _ in series.values() for t in ts if t > 0]
    if positive:
        ax.set_xscale("symlog", linthresh=min(positive))
    ax.set_xlabel("time [s]")
    ax.set_ylabel("max IR drop [V]")
    ax.legend(loc="best")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    path = os.path.join(outdir, "ir_timeseries.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
