"""Command-line front end.

    emgrid check  --netlist f --params f [thermal flags]
    emgrid run    --netlist f --params f [thermal flags] --out dir [overrides]
    emgrid render --result result.json --out dir

Thermal flags: ``--thermal-map FILE`` or ``--joule-only [--ambient K]``;
``--map-includes-joule`` suppresses the Joule self-heating bump when the
supplied map already embeds it.  ``EMGRID_THREADS`` caps per-tree
parallelism (0 = auto, default 1).

Exit codes: 0 success, 1 input/configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import mna, report, sim, stress
from .errors import EmgridError, SolveError
from .grid import parse_netlist
from .materials import parse_parameters
from .thermal import load_thermal_map


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--netlist", required=True, help="netlist card file")
    p.add_argument("--params", required=True, help="key=value parameters file")
    p.add_argument("--thermal-map", help="gridded thermal map file")
    p.add_argument("--joule-only", action="store_true",
                   help="no map: uniform ambient plus per-wire Joule heating")
    p.add_argument("--ambient", type=float,
                   help="ambient temperature (K) for --joule-only")
    p.add_argument("--map-includes-joule", action="store_true",
                   help="the thermal map already embeds Joule heating")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="emgrid",
        description="coupled EM/TM/IR-drop power-grid aging analysis")
    sub = ap.add_subparsers(dest="command", required=True)

    chk = sub.add_parser("check", help="parse, validate, and summarize filtering")
    _add_common(chk)

    run = sub.add_parser("run", help="full coupled simulation")
    _add_common(run)
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--t-total", type=float, help="override horizon (s)")
    run.add_argument("--ir-fail-frac", type=float,
                     help="override IR-drop failure fraction")
    run.add_argument("--dr-fail-frac", type=float,
                     help="override dR/R0 failure multiple")
    run.add_argument("--checkpoints-per-decade", type=int,
                     help="override checkpoint density")

    ren = sub.add_parser("render", help="re-render heatmaps from result.json")
    ren.add_argument("--result", required=True, help="prior result.json")
    ren.add_argument("--out", required=True, help="output directory")
    return ap


def _load_inputs(args):
    with open(args.netlist, encoding="utf-8") as fh:
        grid = parse_netlist(fh.read())
    with open(args.params, encoding="utf-8") as fh:
        params = parse_parameters(fh.read())

    if args.thermal_map and args.joule_only:
        raise EmgridError("--thermal-map and --joule-only are mutually exclusive")
    if not args.thermal_map and not args.joule_only:
        raise EmgridError(
            "no thermal input: pass --thermal-map FILE or --joule-only")
    tmap = None
    if args.thermal_map:
        with open(args.thermal_map, encoding="utf-8") as fh:
            tmap = load_thermal_map(fh.read())
    return grid, params, tmap


def _make_config(args, params, tmap) -> sim.SimulationConfig:
    if getattr(args, "t_total", None):
        params.solver.t_total = args.t_total
    if getattr(args, "ir_fail_frac", None):
        params.solver.ir_fail_frac = args.ir_fail_frac
    if getattr(args, "dr_fail_frac", None):
        params.solver.dr_fail_frac = args.dr_fail_frac
    if getattr(args, "checkpoints_per_decade", None):
        params.solver.checkpoints_per_decade = args.checkpoints_per_decade
    threads = int(os.environ.get("EMGRID_THREADS", "1"))
    return sim.SimulationConfig(params=params, thermal_map=tmap,
                                ambient=args.ambient,
                                map_includes_joule=args.map_includes_joule,
                                threads=threads)


def cmd_check(args) -> int:
    grid, params, tmap = _load_inputs(args)
    cfg = _make_config(args, params, tmap)
    sys_ = mna.assemble(grid)
    mna.solve(sys_)
    densities = {sid: d for sid, (_, d) in mna.branch_currents(sys_, grid).items()}
    mortal = 0
    for tree in grid.trees:
        profiles = sim.build_profiles(grid, cfg, tree.segments)
        disc = stress.discretize(tree, grid, profiles, cfg.params.material,
                                 cfg.params.solver)
        if not stress.filter_immortal(disc, grid, profiles, densities,
                                      cfg.params.material):
            mortal += 1
    print(f"{len(grid.nodes)} nodes, {len(grid.segments)} segments, "
          f"{len(grid.vias)} vias, {len(grid.pads)} pads, {len(grid.loads)} loads")
    print(f"{len(grid.trees)} trees, {mortal} mortal")
    return 0


def cmd_run(args) -> int:
    grid, params, tmap = _load_inputs(args)
    cfg = _make_config(args, params, tmap)
    result = sim.run(grid, cfg)
    inputs = {"netlist": args.netlist, "params": args.params}
    if args.thermal_map:
        inputs["thermal_map"] = args.thermal_map
    from .materials import dump_parameters
    manifest = report.build_manifest(inputs, {
        "resolved": dump_parameters(params).strip().splitlines(),
        "thermal_mode": "map" if tmap is not None else "joule_only",
        "ambient_k": cfg.ambient,
        "map_includes_joule": cfg.map_includes_joule,
    })
    written = report.emit_reports(result, grid, cfg, manifest, args.out)
    print(f"{len(grid.trees)} trees, {result.mortal_count} mortal; "
          f"chip lifetime {result.chip_lifetime:.6g} s"
          + (" (censored)" if not result.chip_failed else ""))
    for path in written:
        print(f"wrote {path}")
    return 0


def cmd_render(args) -> int:
    doc = report.load_result_document(args.result)
    os.makedirs(args.out, exist_ok=True)
    written = report.render_heatmaps(doc, args.out)
    written.append(report.render_timeseries_figure(doc, args.out))
    for path in written:
        print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"check": cmd_check, "run": cmd_run, "render": cmd_render}[args.command]
    try:
        return handler(args)
    except SolveError as exc:
        print(f"emgrid: numerical failure: {exc}", file=sys.stderr)
        return 2
    except (EmgridError, OSError) as exc:
        print(f"emgrid: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
