"""Resistive power-grid solve by Modified Nodal Analysis.

All sources are grounded ideal voltage sources (pads), so pad nodes are
eliminated by Dirichlet substitution instead of MNA augmentation.  That
keeps the conductance matrix symmetric positive definite and the solve a
single sparse factorization.  Loads are constant current sinks to
ground.  The factorization is reused across aging steps until some
resistance has drifted by more than REFACTOR_TOL since it was computed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SolveError, ValidationError
from .grid import PowerGrid

REFACTOR_TOL = 1e-4   # refactor when any R changed by > 0.01%


@dataclass
class ConductanceSystem:
    index: dict[int, int]          # grid node id -> matrix row
    order: list[int]               # matrix row -> grid node id
    g: sp.csc_matrix               # reduced conductance matrix, S
    rhs: np.ndarray                # current injections, A
    voltages: np.ndarray | None = None   # solution, V
    resistances: dict[int, float] = field(default_factory=dict)
    _lu: object = None

    def node_voltage(self, grid: PowerGrid, nid: int) -> float:
        if nid in grid.pads:
            return grid.pads[nid]
        return float(self.voltages[self.index[nid]])


def assemble(grid: PowerGrid, resistances: dict[int, float] | None = None,
             previous: ConductanceSystem | None = None) -> ConductanceSystem:
    """Stamp the conductance system with the given per-segment resistances.

    ``resistances`` maps segment id -> ohms (defaults to as-drawn R0).
    When ``previous`` is supplied and no resistance moved by more than
    REFACTOR_TOL, the previous factorized system is returned unchanged.
    """
    res = {sid: (resistances[sid] if resistances else seg.r0)
           for sid, seg in grid.segments.items()}
    for sid, r in res.items():
        if r <= 0:
            raise SolveError(f"segment {grid.segments[sid].name!r} has R <= 0")

    if previous is not None and previous.resistances:
        drift = max(abs(res[sid] - previous.resistances[sid]) / previous.resistances[sid]
                    for sid in res)
        if drift <= REFACTOR_TOL:
            return previous

    unknown = [nid for nid in sorted(grid.nodes) if nid not in grid.pads]
    index = {nid: k for k, nid in enumerate(unknown)}
    n = len(unknown)
    rows, cols, vals = [], [], []
    rhs = np.zeros(n)

    def stamp(a: int, b: int, g: float):
        for u, v in ((a, b), (b, a)):
            if u in index:
                rows.append(index[u])
                cols.append(index[u])
                vals.append(g)
                if v in index:
                    rows.append(index[u])
                    cols.append(index[v])
                    vals.append(-g)
                else:  # pad: move known voltage to the right-hand side
                    rhs[index[u]] += g * grid.pads[v]

    for sid, seg in grid.segments.items():
        stamp(seg.n1, seg.n2, 1.0 / res[sid])
    for via in grid.vias.values():
        if via.resistance > 0:
            stamp(via.lower, via.upper, 1.0 / via.resistance)
        else:
            raise SolveError(f"via {via.name!r} with zero resistance unsupported")
    for nid, current in grid.loads.items():
        if nid in index:
            rhs[index[nid]] -= current   # sink to ground

    g = sp.csc_matrix(sp.coo_matrix((vals, (rows, cols)), shape=(n, n)))

    # floating-subnetwork check: every unknown must reach a pad
    reach = _pad_reachable(grid)
    for nid in unknown:
        if nid not in reach:
            raise SolveError(
                f"floating subnetwork: node {grid.nodes[nid].name!r} "
                "has no resistive path to any pad")

    return ConductanceSystem(index, unknown, g, rhs, resistances=res)


def _pad_reachable(grid: PowerGrid) -> set[int]:
    adj: dict[int, list[int]] = {nid: [] for nid in grid.nodes}
    for seg in grid.segments.values():
        adj[seg.n1].append(seg.n2)
        adj[seg.n2].append(seg.n1)
    for via in grid.vias.values():
        adj[via.lower].append(via.upper)
        adj[via.upper].append(via.lower)
    seen = set(grid.pads)
    stack = list(grid.pads)
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return seen


def solve(sys: ConductanceSystem) -> np.ndarray:
    """Factorize (cached) and solve G u = rhs; checks the residual."""
    if sys._lu is None:
        try:
            sys._lu = spla.splu(sys.g)
        except RuntimeError as exc:
            raise SolveError(f"singular conductance matrix: {exc}") from exc
    u = sys._lu.solve(sys.rhs)
    if not np.all(np.isfinite(u)):
        bad = sys.order[int(np.argmax(~np.isfinite(u)))]
        raise SolveError(f"non-finite voltage at node id {bad}")
    scale = np.abs(sys.rhs).max()
    if scale > 0:
        resid = np.abs(sys.g @ u - sys.rhs).max() / scale
        if resid > 1e-10:
            raise SolveError(f"IR solve residual {resid:.3g} exceeds 1e-10")
    sys.voltages = u
    return u


def branch_currents(sys: ConductanceSystem, grid: PowerGrid) -> dict[int, tuple[float, float]]:
    """Per-segment (current, density), signed n1 -> n2, from the solved system."""
    if sys.voltages is None:
        raise SolveError("system not solved")
    out = {}
    for sid, seg in grid.segments.items():
        v1 = sys.node_voltage(grid, seg.n1)
        v2 = sys.node_voltage(grid, seg.n2)
        i = (v1 - v2) / sys.resistances[sid]
        out[sid] = (i, i / seg.area)
    return out


def ir_drop_map(sys: ConductanceSystem, grid: PowerGrid) -> dict[int, float]:
    """Pad voltage of the node's net minus the node voltage, per node."""
    if sys.voltages is None:
        raise SolveError("system not solved")
    pad_v = {net: grid.pad_voltage(net) for net in grid.nets()}
    drops = {}
    for nid, node in grid.nodes.items():
        if node.net.startswith("FLOAT"):
            continue
        drops[nid] = pad_v[node.net] - sys.node_voltage(grid, nid)
    return drops


def max_ir_drop_per_net(sys: ConductanceSystem, grid: PowerGrid) -> dict[str, float]:
    drops = ir_drop_map(sys, grid)
    out: dict[str, float] = {}
    for nid, d in drops.items():
        net = grid.nodes[nid].net
        out[net] = max(out.get(net, 0.0), d)
    return out
