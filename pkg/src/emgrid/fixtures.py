"""Synthetic fixtures: mesh netlists, thermal map files, parameter files,
and randomly generated interconnect trees.

These back the bundled demo inputs and the test/acceptance suites.  All
generators are deterministic for a given seed.
"""

from __future__ import annotations

import numpy as np

from .constants import UM
from .grid import Node, PowerGrid, WireSegment, extract_trees
from .thermal import TemperatureProfile, ThermalParams, characteristic_length


def mesh_netlist(rows: int = 4, cols: int = 4, pitch_um: float = 100.0,
                 width_um: float = 0.5, thick_um: float = 0.2,
                 rho: float = 2.2e-8, via_ohm: float = 0.5,
                 pad_v: float = 1.0, load_a: float = 2.0e-3,
                 load_positions: list[tuple] | None = None) -> str:
    """Two-layer mesh: horizontal runs on layer 1, vertical runs on
    layer 2, a via at every intersection.  Pads at the four corners on
    layer 2, loads at interior layer-1 nodes.

    The default 4x4 grid has 32 nodes (16 intersections x 2 layers),
    24 resistors, 16 vias, and 8 interconnect trees (one per row run,
    one per column run).
    """
    seg_r = rho * (pitch_um * UM) / ((width_um * UM) * (thick_um * UM))
    lines = [f"* synthetic {rows}x{cols} mesh power grid"]
    for r in range(rows):
        for c in range(cols):
            x, y = c * pitch_um, r * pitch_um
            lines.append(f"Nh{r}_{c} x={x:g} y={y:g} layer=1")
            lines.append(f"Nv{r}_{c} x={x:g} y={y:g} layer=2")
    geom = f"W={width_um:g} H={thick_um:g} L={pitch_um:g}"
    k = 0
    for r in range(rows):
        for c in range(cols - 1):
            k += 1
            lines.append(f"Rh{k} h{r}_{c} h{r}_{c + 1} {seg_r:.9g} ; {geom} layer=1")
    for c in range(cols):
        for r in range(rows - 1):
            k += 1
            lines.append(f"Rv{k} v{r}_{c} v{r + 1}_{c} {seg_r:.9g} ; {geom} layer=2")
    for r in range(rows):
        for c in range(cols):
            lines.append(f"VIA{r}_{c} h{r}_{c} v{r}_{c} {via_ohm:g}")
    for r, c in ((0, 0), (0, cols - 1), (rows - 1, 0), (rows - 1, cols - 1)):
        lines.append(f"Vp{r}_{c} v{r}_{c} 0 {pad_v:g}")
    if load_positions is None:
        load_positions = [(r, c) for r in (1, rows - 2) for c in (1, cols - 2)]
    for pos in load_positions:
        r, c = pos[0], pos[1]
        amps = pos[2] if len(pos) > 2 else load_a
        lines.append(f"Il{r}_{c} h{r}_{c} 0 {amps:g}")
    lines.append(".end")
    return "\n".join(lines) + "\n"


def thermal_map_text(kind: str, extent_um: float = 300.0, mean_k: float = 350.0,
                     nx: int = 13, ny: int = 13, swing_k: float = 40.0,
                     margin_um: float = 50.0) -> str:
    """Thermal map files with a common spatial mean.

    kind: 'uniform' (flat), 'gradient' (linear tilt along x), or
    'hotspot' (Gaussian peak at the center, cooler rim); all three have
    the same mean temperature to within float rounding, so lifetime
    differences come from the spatial pattern alone.
    """
    x0 = y0 = -margin_um
    span = extent_um + 2 * margin_um
    dx = span / (nx - 1)
    dy = span / (ny - 1)
    xs = np.linspace(0.0, 1.0, nx)
    ys = np.linspace(0.0, 1.0, ny)
    xg, yg = np.meshgrid(xs, ys)
    if kind == "uniform":
        t = np.full((ny, nx), mean_k)
    elif kind == "gradient":
        t = mean_k + swing_k * (xg - xg.mean())
    elif kind == "hotspot":
        bump = np.exp(-(((xg - 0.5) ** 2 + (yg - 0.5) ** 2) / (2 * 0.18 ** 2)))
        t = mean_k + 2.5 * swing_k * (bump - bump.mean())
    else:
        raise ValueError(f"unknown thermal map kind {kind!r}")
    lines = [f"{x0:g} {y0:g} {dx:.9g} {dy:.9g} {nx} {ny}"]
    for row in t:
        lines.append(",".join(f"{v:.9g}" for v in row))
    return "\n".join(lines) + "\n"


def default_params_text(**overrides) -> str:
    """Parameters file with the library defaults plus overrides."""
    from .materials import Parameters, dump_parameters
    text = dump_parameters(Parameters())
    out = []
    for line in text.splitlines():
        key = line.split("=")[0].strip()
        if key in overrides:
            out.append(f"{key} = {overrides.pop(key)}")
        else:
            out.append(line)
    for key, val in overrides.items():
        raise KeyError(f"unknown parameter {key!r}")
    return "\n".join(out) + "\n"


def build_grid(node_specs, seg_specs, vias=(), pads=None, loads=None) -> PowerGrid:
    """Assemble a PowerGrid directly from tuples (test helper).

    node_specs: (name, x_m, y_m, layer); seg_specs: (name, n1, n2, layer,
    w_m, h_m, l_m, rho, r0); pads/loads: {name: value}.
    """
    grid = PowerGrid()
    for name, x, y, layer in node_specs:
        nid = len(grid.nodes)
        grid.nodes[nid] = Node(nid, name, x, y, layer, net="VP")
        grid.node_names[name] = nid
    for name, a, b, layer, w, h, length, rho, r0 in seg_specs:
        sid = len(grid.segments)
        grid.segments[sid] = WireSegment(
            sid, name, grid.node_names[a], grid.node_names[b], layer,
            w, h, length, rho, r0)
    for name, value in (pads or {}).items():
        nid = grid.node_names[name]
        grid.pads[nid] = value
        grid.nodes[nid].kind = "pad"
    for name, value in (loads or {}).items():
        nid = grid.node_names[name]
        grid.loads[nid] = value
        grid.nodes[nid].kind = "load"
    grid.trees = extract_trees(grid)
    return grid


def random_tree_grid(seed: int, n_branches: int = 33,
                     j_scale: float = 6.0e9,
                     therm: ThermalParams | None = None):
    """Random interconnect tree with nonuniform temperatures and signed
    per-branch current densities.

    Returns (grid, densities, profiles): a single-tree PowerGrid, the
    segment-id -> A/m^2 map, and segment-id -> TemperatureProfile built
    from a smooth random temperature field sampled at the tree nodes.
    """
    rng = np.random.default_rng(seed)
    therm = therm or ThermalParams()
    rho = 2.2e-8

    # grow a random tree: each new branch hangs off a random existing node
    xs = [0.0]
    ys = [0.0]
    node_specs = [("t0", 0.0, 0.0, 1)]
    seg_specs = []
    for b in range(n_branches):
        parent = int(rng.integers(0, len(node_specs)))
        length = float(rng.uniform(20.0, 80.0)) * UM
        angle = float(rng.uniform(0, 2 * np.pi))
        nx = xs[parent] + length * np.cos(angle)
        ny = ys[parent] + length * np.sin(angle)
        name = f"t{b + 1}"
        node_specs.append((name, nx, ny, 1))
        xs.append(nx)
        ys.append(ny)
        w = float(rng.uniform(0.2, 1.0)) * UM
        h = 0.2 * UM
        r0 = rho * length / (w * h)
        seg_specs.append((f"Rb{b}", node_specs[parent][0], name, 1,
                          w, h, length, rho, r0))
    grid = build_grid(node_specs, seg_specs)

    # smooth random temperature field over the layout
    a1, a2 = rng.uniform(-1, 1, size=2)
    cx, cy = rng.uniform(min(xs), max(xs)), rng.uniform(min(ys), max(ys))
    width = 0.5 * (max(xs) - min(xs) + 1e-6)

    def field(x, y):
        r2 = ((x - cx) ** 2 + (y - cy) ** 2) / (width ** 2 + 1e-30)
        return (350.0 + 15.0 * a1 * (x - np.mean(xs)) / (width + 1e-30)
                + 15.0 * a2 * (y - np.mean(ys)) / (width + 1e-30)
                + 25.0 * np.exp(-r2))

    densities = {}
    profiles = {}
    for sid, seg in grid.segments.items():
        j = float(rng.uniform(0.3, 1.0) * j_scale * rng.choice([-1.0, 1.0]))
        densities[sid] = j
        n1, n2 = grid.nodes[seg.n1], grid.nodes[seg.n2]
        t1 = float(field(n1.x, n1.y))
        t2 = float(field(n2.x, n2.y))
        gamma = characteristic_length(seg, therm)
        bump = seg.rho * j * j * gamma * gamma / therm.k_cu
        profiles[sid] = TemperatureProfile(t1, t2, bump, gamma, seg.length)
        seg.density = j
        seg.current = j * seg.area
    return grid, densities, profiles
