"""Power-grid netlist model: parsing, validation and interconnect-tree extraction.

The netlist format is a line-oriented, SPICE-like card file (UTF-8):

    * comment
    Nname  x=<um> y=<um> layer=<int>          node declaration
    Rname  n1 n2 <ohm> ; W=<um> H=<um> L=<um> layer=<int> [rho=<ohm*m>]
    VIAname nlow nup <ohm>                    inter-layer via
    Vname  n+ 0 <volt>                        pad (ideal grounded source)
    Iname  n+ 0 <amp>                         load (current sink to ground)
    .end

Element letters are case-insensitive.  Node coordinates are mandatory for
every node referenced by a resistor card (they drive thermal sampling).
Geometry on the card is in micrometers; everything is converted to SI
internally (meters, ohms, volts, amps).

Interconnect trees are the unit of electromigration analysis: maximal
connected groups of same-layer, same-net wire segments.  Vias use
refractory barrier layers, so atomic flux terminates at the tree
boundary; a via landing on an interior node of a run does not split the
run (atoms pass beneath the landing pad), it only provides an electrical
connection.  Tree terminals are the degree-1 boundary nodes, which by
construction coincide with via attachment points or dead ends.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .constants import UM
from .errors import NetlistError, ValidationError

# default copper resistivity used when a resistor card omits rho=
RHO_CU_DEFAULT = 2.2e-8  # ohm*m


@dataclass
class Node:
    id: int
    name: str
    x: float            # m
    y: float            # m
    layer: int
    kind: str = "internal"   # internal | pad | load
    net: str = ""


@dataclass
class WireSegment:
    id: int
    name: str
    n1: int
    n2: int
    layer: int
    width: float        # m
    thickness: float    # m  (copper thickness, t_cu)
    length: float       # m
    rho: float          # ohm*m
    r0: float           # ohm, as-drawn resistance
    current: float = 0.0     # A, signed n1 -> n2, updated per step
    density: float = 0.0     # A/m^2, current / (width*thickness)

    @property
    def area(self) -> float:
        return self.width * self.thickness


@dataclass
class Via:
    id: int
    name: str
    lower: int
    upper: int
    resistance: float   # ohm


@dataclass
class InterconnectTree:
    id: int
    segments: list[int]
    nodes: list[int]
    terminals: list[int]


@dataclass
class PowerGrid:
    nodes: dict[int, Node] = field(default_factory=dict)
    segments: dict[int, WireSegment] = field(default_factory=dict)
    vias: dict[int, Via] = field(default_factory=dict)
    loads: dict[int, float] = field(default_factory=dict)   # node id -> A
    pads: dict[int, float] = field(default_factory=dict)    # node id -> V
    trees: list[InterconnectTree] = field(default_factory=list)
    node_names: dict[str, int] = field(default_factory=dict)

    def node_by_name(self, name: str) -> Node:
        return self.nodes[self.node_names[name]]

    def pad_voltage(self, net: str) -> float:
        """Supply voltage of a net (max over its pads)."""
        vs = [v for nid, v in self.pads.items() if self.nodes[nid].net == net]
        if not vs:
            raise ValidationError(f"net {net!r} has no pad")
        return max(vs)

    def nets(self) -> list[str]:
        return sorted({n.net for n in self.nodes.values() if n.net})


_KV_RE = re.compile(r"([A-Za-z_]+)\s*=\s*([-+0-9.eE]+)")


def _parse_kv(text: str, lineno: int) -> dict[str, float]:
    out = {}
    for m in _KV_RE.finditer(text):
        out[m.group(1).lower()] = float(m.group(2))
    return out


def _num(tok: str, lineno: int, col: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise NetlistError(f"expected a number, got {tok!r}", lineno, col) from None


def parse_netlist(text: str) -> PowerGrid:
    """Parse netlist source into a validated PowerGrid.

    Raises NetlistError on syntax problems (with line/column), dangling
    node references, duplicate element names, or missing geometry.
    """
    grid = PowerGrid()
    seen_elements: set[str] = set()
    node_cards: dict[str, tuple[float, float, int, int]] = {}  # name -> (x, y, layer, line)
    r_cards = []    # (name, n1, n2, value, kv, line)
    via_cards = []  # (name, nlo, nup, value, line)
    v_cards = []    # (name, node, value, line)
    i_cards = []    # (name, node, value, line)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("*"):
            continue
        if line.lower().startswith(".end"):
            break
        body, _, tail = line.partition(";")
        toks = body.split()
        card = toks[0]
        col = raw.index(card) + 1
        lower = card.lower()

        def need(n: int):
            if len(toks) < n:
                raise NetlistError(f"card {card!r} needs {n - 1} fields", lineno, col)

        if lower.startswith("via"):
            need(4)
            name = card
            via_cards.append((name, toks[1], toks[2], _num(toks[3], lineno, col), lineno))
        elif lower.startswith("r"):
            need(4)
            kv = _parse_kv(tail, lineno)
            r_cards.append((card, toks[1], toks[2], _num(toks[3], lineno, col), kv, lineno))
        elif lower.startswith("v"):
            need(4)
            if toks[2] != "0":
                raise NetlistError("voltage sources must be grounded (n+ 0)", lineno, col)
            v_cards.append((card, toks[1], _num(toks[3], lineno, col), lineno))
        elif lower.startswith("i"):
            need(4)
            if toks[2] != "0":
                raise NetlistError("current loads must sink to ground (n+ 0)", lineno, col)
            i_cards.append((card, toks[1], _num(toks[3], lineno, col), lineno))
        elif lower.startswith("n"):
            kv = _parse_kv(body[len(card):], lineno)
            missing = {"x", "y", "layer"} - kv.keys()
            if missing:
                raise NetlistError(
                    f"node card {card!r} missing {sorted(missing)}", lineno, col)
            nodename = card[1:]
            if not nodename:
                raise NetlistError("node card has empty name", lineno, col)
            if nodename in node_cards:
                raise NetlistError(f"duplicate node declaration {nodename!r}", lineno, col)
            node_cards[nodename] = (kv["x"], kv["y"], int(kv["layer"]), lineno)
        else:
            raise NetlistError(f"unknown card {card!r}", lineno, col)

        if not lower.startswith("n"):
            key = lower
            if key in seen_elements:
                raise NetlistError(f"duplicate element name {card!r}", lineno, col)
            seen_elements.add(key)

    # materialize nodes
    for name, (x, y, layer, lineno) in node_cards.items():
        nid = len(grid.nodes)
        grid.nodes[nid] = Node(nid, name, x * UM, y * UM, layer)
        grid.node_names[name] = nid

    def ref(name: str, lineno: int) -> int:
        if name not in grid.node_names:
            raise NetlistError(f"dangling node reference {name!r}", lineno)
        return grid.node_names[name]

    for name, a, b, value, kv, lineno in r_cards:
        missing = {"w", "h", "l"} - kv.keys()
        if missing:
            raise NetlistError(
                f"resistor {name!r} missing geometry {sorted(k.upper() for k in missing)}",
                lineno)
        if "layer" not in kv:
            raise NetlistError(f"resistor {name!r} missing layer=", lineno)
        n1, n2 = ref(a, lineno), ref(b, lineno)
        if n1 == n2:
            raise NetlistError(f"resistor {name!r} shorts node {a!r} to itself", lineno)
        if value <= 0:
            raise NetlistError(f"resistor {name!r} has non-positive value", lineno)
        w, h, length = kv["w"] * UM, kv["h"] * UM, kv["l"] * UM
        if min(w, h, length) <= 0:
            raise NetlistError(f"resistor {name!r} has non-positive geometry", lineno)
        rho = kv.get("rho", RHO_CU_DEFAULT)
        if "rho" in kv:
            r_geom = rho * length / (w * h)
            if abs(r_geom - value) > 0.01 * value:
                raise NetlistError(
                    f"resistor {name!r}: value {value} inconsistent with "
                    f"rho*L/(W*H) = {r_geom:.6g} (>1%)", lineno)
        sid = len(grid.segments)
        grid.segments[sid] = WireSegment(
            sid, name, n1, n2, int(kv["layer"]), w, h, length, rho, value)

    for name, a, b, value, lineno in via_cards:
        lo, up = ref(a, lineno), ref(b, lineno)
        if value < 0:
            raise NetlistError(f"via {name!r} has negative resistance", lineno)
        vid = len(grid.vias)
        grid.vias[vid] = Via(vid, name, lo, up, value)

    for name, a, value, lineno in v_cards:
        nid = ref(a, lineno)
        grid.pads[nid] = value
        grid.nodes[nid].kind = "pad"
    for name, a, value, lineno in i_cards:
        nid = ref(a, lineno)
        grid.loads[nid] = value
        grid.nodes[nid].kind = "load"

    _validate(grid)
    _assign_nets(grid, {v[0].lower(): v for v in v_cards})
    grid.trees = extract_trees(grid)
    return grid


def _adjacency(grid: PowerGrid) -> dict[int, list[int]]:
    adj: dict[int, list[int]] = {nid: [] for nid in grid.nodes}
    for seg in grid.segments.values():
        adj[seg.n1].append(seg.n2)
        adj[seg.n2].append(seg.n1)
    for via in grid.vias.values():
        adj[via.lower].append(via.upper)
        adj[via.upper].append(via.lower)
    return adj


def _components(grid: PowerGrid) -> list[set[int]]:
    adj = _adjacency(grid)
    seen: set[int] = set()
    comps = []
    for start in grid.nodes:
        if start in seen:
            continue
        comp = {start}
        stack = [start]
        seen.add(start)
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    comp.add(v)
                    stack.append(v)
        comps.append(comp)
    return comps


def _validate(grid: PowerGrid) -> None:
    for seg in grid.segments.values():
        la1 = grid.nodes[seg.n1].layer
        la2 = grid.nodes[seg.n2].layer
        if la1 != la2 or la1 != seg.layer:
            raise ValidationError(
                f"segment {seg.name!r} endpoints not on its layer "
                f"({la1}, {la2} vs {seg.layer})")
    for via in grid.vias.values():
        if grid.nodes[via.lower].layer == grid.nodes[via.upper].layer:
            raise ValidationError(f"via {via.name!r} connects nodes on the same layer")
    # every load must reach a pad
    for comp in _components(grid):
        has_load = any(n in grid.loads for n in comp)
        has_pad = any(n in grid.pads for n in comp)
        if has_load and not has_pad:
            member = grid.nodes[min(comp)].name
            raise ValidationError(
                f"load cluster containing node {member!r} is not connected to any pad")


def _assign_nets(grid: PowerGrid, v_cards: dict) -> None:
    for k, comp in enumerate(_components(grid)):
        pad_names = sorted(grid.nodes[n].name for n in comp if n in grid.pads)
        if pad_names:
            # net named after the first pad's element is opaque; use the
            # pad node name uppercased, the usual supply-net convention
            net = pad_names[0].upper()
        else:
            net = f"FLOAT{k}"
        for n in comp:
            grid.nodes[n].net = net


def extract_trees(grid: PowerGrid) -> list[InterconnectTree]:
    """Partition segments into maximal same-layer, same-net connected groups."""
    parent = {sid: sid for sid in grid.segments}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra

    by_node: dict[tuple[int, int], list[int]] = {}
    for sid, seg in grid.segments.items():
        for n in (seg.n1, seg.n2):
            by_node.setdefault((n, seg.layer), []).append(sid)
    for sids in by_node.values():
        for other in sids[1:]:
            union(sids[0], other)

    groups: dict[int, list[int]] = {}
    for sid in grid.segments:
        groups.setdefault(find(sid), []).append(sid)

    trees = []
    for tid, root in enumerate(sorted(groups)):
        sids = sorted(groups[root])
        nodes: set[int] = set()
        degree: dict[int, int] = {}
        for sid in sids:
            seg = grid.segments[sid]
            for n in (seg.n1, seg.n2):
                nodes.add(n)
                degree[n] = degree.get(n, 0) + 1
        terminals = sorted(n for n, d in degree.items() if d == 1)
        trees.append(InterconnectTree(tid, sids, sorted(nodes), terminals))
    return trees


def serialize(grid: PowerGrid) -> str:
    """Emit netlist text that re-parses to an identical PowerGrid."""
    lines = ["* emgrid netlist"]
    for nid in sorted(grid.nodes):
        n = grid.nodes[nid]
        lines.append(f"N{n.name} x={n.x / UM:.9g} y={n.y / UM:.9g} layer={n.layer}")
    for sid in sorted(grid.segments):
        s = grid.segments[sid]
        a = grid.nodes[s.n1].name
        b = grid.nodes[s.n2].name
        geom = (f"W={s.width / UM:.9g} H={s.thickness / UM:.9g} "
                f"L={s.length / UM:.9g} layer={s.layer}")
        if s.rho != RHO_CU_DEFAULT:
            geom += f" rho={s.rho:.9g}"
        lines.append(f"{s.name} {a} {b} {s.r0:.9g} ; {geom}")
    for vid in sorted(grid.vias):
        v = grid.vias[vid]
        lines.append(f"{v.name} {grid.nodes[v.lower].name} "
                     f"{grid.nodes[v.upper].name} {v.resistance:.9g}")
    for nid in sorted(grid.pads):
        lines.append(f"Vpad_{grid.nodes[nid].name} {grid.nodes[nid].name} 0 "
                     f"{grid.pads[nid]:.9g}")
    for nid in sorted(grid.loads):
        lines.append(f"Iload_{grid.nodes[nid].name} {grid.nodes[nid].name} 0 "
                     f"{grid.loads[nid]:.9g}")
    lines.append(".end")
    return "\n".join(lines) + "\n"
