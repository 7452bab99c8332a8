"""Stress evolution on interconnect trees: electromigration, stress
migration and thermomigration on a shared 1-D finite-difference grid.

The governing balance on each tree is

    d(sigma)/dt = d/dx [ kappa(x) * (d(sigma)/dx - S - M) ]

with electron-wind drive S = eZ*rho*j/Omega (constant per branch),
thermomigration drive M = (Q / (Omega*T)) * dT/dx, and zero total flux
at the tree terminals during the nucleation phase.  kappa(x) =
D_a(T)*B*Omega/(kB*T) with the Arrhenius diffusivity
D_a = D0*exp(-Ea/(kB*T)).

Discretization is finite-volume: stress unknowns at FD nodes, fluxes at
interval midpoints, junction nodes shared between branches so a single
stress value holds there and incident fluxes sum.  Each interface
contributes +flux to its left node and -flux to its right node, so the
cell-length weighted total of sigma is conserved exactly (terminals get
no boundary flux).  Time integration is backward Euler with a sparse
direct factorization per tree, cached while the step size and operator
are unchanged.

After a void nucleates at the first node reaching sigma_crit, the void
surface acts as a stress sink: the relaxation flux kappa*sigma/delta
leaves the domain at the nucleation node (the surface boundary condition
d(sigma)/dx = sigma/delta read as a one-sided flux).  As delta -> inf
this reduces to the nucleation-phase operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .constants import KB_J, QE
from .errors import ConfigError, SolveError
from .grid import InterconnectTree, PowerGrid
from .materials import MaterialParams, SolverSettings
from .thermal import TemperatureProfile

NUCLEATION = "nucleation"
POST_VOID = "post_void"


def effective_diffusivity(temperature, mat: MaterialParams):
    """kappa(T) = D0*exp(-Ea/(kb*T)) * B * Omega / (kB*T), in m^2/s.

    Accepts scalars or arrays; strictly increasing in T for physical Ea.
    """
    t = np.asarray(temperature, dtype=float)
    d_a = mat.d0 * np.exp(-mat.ea / (mat.kb * t))
    kappa = d_a * mat.bulk_modulus * mat.atomic_volume / (KB_J * t)
    return float(kappa) if kappa.ndim == 0 else kappa


@dataclass
class BranchGrid:
    sid: int                 # segment id
    fd_nodes: np.ndarray     # global FD indices from the n1 end to the n2 end
    h: float                 # spacing, m
    area: float              # cross-section, m^2
    s_coef: float            # eZ*rho/Omega * polarity; S = s_coef * j
    kappa_if: np.ndarray     # diffusivity at interval midpoints
    m_if: np.ndarray         # thermomigration drive at interval midpoints


@dataclass
class DiscretizedTree:
    tree_id: int
    n: int                               # FD node count
    branches: list[BranchGrid]
    cell: np.ndarray                     # dual cell lengths (C diagonal), m
    a: sp.csc_matrix                     # n x n operator
    b_in: sp.csc_matrix                  # n x p, maps branch densities to drive
    d_tm: np.ndarray                     # n, thermomigration divergence
    coords: np.ndarray                   # n x 2 world coordinates, m
    temps: np.ndarray                    # n, temperature at FD nodes, K
    kappa_node: np.ndarray               # n, diffusivity at FD nodes
    terminals: list[int]                 # FD indices of tree terminals
    grid_fd: dict[int, int]              # grid node id -> FD index
    seg_of_branch: list[int]             # branch order -> segment id
    arc_pos: dict[int, np.ndarray] = field(default_factory=dict)  # sid -> node arc, m
    _fact: tuple | None = None

    def density_vector(self, densities: dict[int, float]) -> np.ndarray:
        return np.array([densities[sid] for sid in self.seg_of_branch])


@dataclass
class TreeStressState:
    tree_id: int
    sigma: np.ndarray
    phase: str = NUCLEATION
    t_nuc: float | None = None
    nuc_node: int | None = None          # FD index
    nuc_sid: int | None = None           # segment carrying the void
    void_volume: float = 0.0             # m^3
    delta_r: dict[int, float] = field(default_factory=dict)
    clamp_count: int = 0                 # negative void-integrand cells clamped


def discretize(tree: InterconnectTree, grid: PowerGrid,
               profiles: dict[int, TemperatureProfile], mat: MaterialParams,
               settings: SolverSettings) -> DiscretizedTree:
    """Build the finite-volume operator for one tree.

    ``profiles`` maps segment id -> TemperatureProfile.  The per-branch
    current density is applied later through the input matrix, so the
    discretization is reusable while temperatures are unchanged.
    """
    grid_fd = {nid: k for k, nid in enumerate(tree.nodes)}
    n = len(tree.nodes)
    coords = [(grid.nodes[nid].x, grid.nodes[nid].y) for nid in tree.nodes]

    branches: list[BranchGrid] = []
    rows, cols, vals = [], [], []
    brows, bcols, bvals = [], [], []
    cell = np.zeros(0)
    d_tm = np.zeros(0)

    def grow(k):
        nonlocal cell, d_tm
        cell = np.concatenate([cell, np.zeros(k)])
        d_tm = np.concatenate([d_tm, np.zeros(k)])

    grow(n)

    for b_idx, sid in enumerate(tree.segments):
        seg = grid.segments[sid]
        prof = profiles[sid]
        length = seg.length
        dx = min(max(length / settings.dx_div, settings.dx_min), settings.dx_max)
        m = max(2, int(math.ceil(length / dx)))
        h = length / m
        if length < 2 * settings.dx_min:
            raise ConfigError(
                f"segment {seg.name!r} shorter than twice dx_min; degenerate branch")

        first = n
        interior = list(range(first, first + m - 1))
        n += m - 1
        grow(m - 1)
        fd = np.array([grid_fd[seg.n1]] + interior + [grid_fd[seg.n2]])

        # local coordinate of FD nodes: -L/2 .. +L/2
        xs = -0.5 * length + h * np.arange(m + 1)
        t_nodes = prof.temperature(xs)
        mids = xs[:-1] + 0.5 * h
        t_mid = prof.temperature(mids)
        dt_mid = prof.gradient(mids)
        kappa_if = effective_diffusivity(t_mid, mat)
        q_j = mat.q_transport * QE
        m_if = (q_j / (mat.atomic_volume * t_mid)) * dt_mid
        s_coef = mat.em_polarity * mat.ez_eff * seg.rho / mat.atomic_volume

        # interior node coordinates, linear between the segment endpoints
        x1, y1 = grid.nodes[seg.n1].x, grid.nodes[seg.n1].y
        x2, y2 = grid.nodes[seg.n2].x, grid.nodes[seg.n2].y
        fr = np.arange(1, m) / m
        coords.extend(zip(x1 + (x2 - x1) * fr, y1 + (y2 - y1) * fr))

        for k in range(m):
            p, q = int(fd[k]), int(fd[k + 1])
            kap = float(kappa_if[k])
            g = kap / h
            # +flux to left node p, -flux to right node q
            rows += [p, p, q, q]
            cols += [q, p, p, q]
            vals += [g, -g, g, -g]
            brows += [p, q]
            bcols += [b_idx, b_idx]
            bvals += [-kap * s_coef, kap * s_coef]
            d_tm[p] += kap * float(m_if[k])
            d_tm[q] -= kap * float(m_if[k])
            cell[p] += 0.5 * h
            cell[q] += 0.5 * h

        branches.append(BranchGrid(sid, fd, h, seg.area, s_coef, kappa_if, m_if))

    a = sp.csc_matrix(sp.coo_matrix((vals, (rows, cols)), shape=(n, n)))
    b_in = sp.csc_matrix(sp.coo_matrix((bvals, (brows, bcols)),
                                       shape=(n, len(branches))))
    # junction temperatures: average of incident branch endpoint samples
    temps = _junction_temps(tree, grid, profiles, n, grid_fd, branches)
    kappa_node = effective_diffusivity(temps, mat)

    disc = DiscretizedTree(
        tree_id=tree.id, n=n, branches=branches, cell=cell, a=a, b_in=b_in,
        d_tm=d_tm, coords=np.asarray(coords), temps=temps,
        kappa_node=kappa_node,
        terminals=[grid_fd[t] for t in tree.terminals], grid_fd=grid_fd,
        seg_of_branch=[b.sid for b in branches])
    for b in branches:
        disc.arc_pos[b.sid] = b.h * np.arange(len(b.fd_nodes))
    return disc


def _junction_temps(tree, grid, profiles, n, grid_fd, branches) -> np.ndarray:
    temps = np.zeros(n)
    counts = np.zeros(n)
    for b in branches:
        seg = grid.segments[b.sid]
        prof = profiles[b.sid]
        m = len(b.fd_nodes) - 1
        xs = -0.5 * seg.length + b.h * np.arange(m + 1)
        tv = prof.temperature(xs)
        for k, g in enumerate(b.fd_nodes):
            temps[g] += tv[k]
            counts[g] += 1
    return temps / counts


def steady_state_stress(disc: DiscretizedTree, grid: PowerGrid,
                        profiles: dict[int, TemperatureProfile],
                        densities: dict[int, float],
                        mat: MaterialParams) -> np.ndarray:
    """Zero-flux steady state: integrate d(sigma)/dx = S + M from a
    reference terminal, then shift so the length-weighted mean equals
    the thermal residual stress (atom conservation).
    """
    sigma = np.full(disc.n, np.nan)
    q_j = mat.q_transport * QE
    start = disc.terminals[0] if disc.terminals else 0
    sigma[start] = 0.0
    by_node: dict[int, list] = {}
    for b in disc.branches:
        by_node.setdefault(int(b.fd_nodes[0]), []).append((b, +1))
        by_node.setdefault(int(b.fd_nodes[-1]), []).append((b, -1))

    stack = [start]
    visited_branches = set()
    while stack:
        g = stack.pop()
        for b, _ in by_node.get(g, []):
            if b.sid in visited_branches:
                continue
            visited_branches.add(b.sid)
            seg = grid.segments[b.sid]
            prof = profiles[b.sid]
            m = len(b.fd_nodes) - 1
            xs = -0.5 * seg.length + b.h * np.arange(m + 1)
            tv = prof.temperature(xs)
            j = densities[b.sid]
            incr = b.s_coef * j * b.h + (q_j / mat.atomic_volume) * np.diff(np.log(tv))
            vals = np.concatenate([[0.0], np.cumsum(incr)])
            if not math.isnan(sigma[b.fd_nodes[0]]):
                base = sigma[b.fd_nodes[0]]
                off = vals - vals[0]
                anchor_end = int(b.fd_nodes[-1])
            elif not math.isnan(sigma[b.fd_nodes[-1]]):
                base = sigma[b.fd_nodes[-1]]
                off = vals - vals[-1]
                anchor_end = int(b.fd_nodes[0])
            else:  # pragma: no cover
                raise SolveError("disconnected branch during steady-state integration")
            newvals = base + off
            known = ~np.isnan(sigma[b.fd_nodes])
            if np.any(np.abs(sigma[b.fd_nodes][known] - newvals[known]) >
                      1e-6 * (1.0 + np.abs(newvals[known]).max())):
                raise SolveError(
                    f"inconsistent path integrals on tree {disc.tree_id}: "
                    "structure contains a cycle")
            sigma[b.fd_nodes] = newvals
            stack.append(anchor_end)

    if np.any(np.isnan(sigma)):  # pragma: no cover
        raise SolveError(f"tree {disc.tree_id} not connected")
    mean = float(np.dot(disc.cell, sigma) / disc.cell.sum())
    return sigma + (mat.sigma_thermal - mean)


def filter_immortal(disc: DiscretizedTree, grid: PowerGrid,
                    profiles: dict[int, TemperatureProfile],
                    densities: dict[int, float], mat: MaterialParams) -> bool:
    """True when the tree can never nucleate: max steady stress below
    the critical threshold."""
    sigma = steady_state_stress(disc, grid, profiles, densities, mat)
    return bool(sigma.max() < mat.sigma_crit)


def initial_state(disc: DiscretizedTree, mat: MaterialParams) -> TreeStressState:
    return TreeStressState(disc.tree_id, np.full(disc.n, mat.sigma_thermal))


def _operator(disc: DiscretizedTree, dt: float, mat: MaterialParams,
              nuc_node: int | None):
    key = (dt, nuc_node)
    if disc._fact is not None:
        (dt_prev, nuc_prev), lu_prev = disc._fact
        # dt values inside one schedule block differ only in the last ulp
        if nuc_prev == nuc_node and abs(dt - dt_prev) <= 1e-12 * dt:
            return lu_prev
    a = disc.a
    if nuc_node is not None:
        sink = sp.csc_matrix(
            ([disc.kappa_node[nuc_node] / mat.delta_surface],
             ([nuc_node], [nuc_node])), shape=(disc.n, disc.n))
        a = (a - sink).tocsc()
    lhs = (sp.diags(disc.cell) - dt * a).tocsc()
    try:
        lu = spla.splu(lhs)
    except RuntimeError as exc:
        raise SolveError(f"stress step factorization failed (dt={dt}): {exc}") from exc
    disc._fact = (key, lu)
    return lu


def _step(state: TreeStressState, disc: DiscretizedTree, dt: float,
          densities: dict[int, float], mat: MaterialParams,
          nuc_node: int | None) -> np.ndarray:
    if dt <= 0:
        raise SolveError(f"non-positive time step {dt}")
    lu = _operator(disc, dt, mat, nuc_node)
    j = disc.density_vector(densities)
    rhs = disc.cell * state.sigma + dt * (disc.b_in @ j - disc.d_tm)
    sigma = lu.solve(rhs)
    if not np.all(np.isfinite(sigma)):
        raise SolveError(f"non-finite stress on tree {disc.tree_id}")
    return sigma


def step_nucleation(state: TreeStressState, disc: DiscretizedTree, dt: float,
                    densities: dict[int, float], mat: MaterialParams) -> np.ndarray:
    """One backward-Euler step in the nucleation phase; returns new sigma."""
    if state.phase != NUCLEATION:
        raise SolveError("step_nucleation called outside the nucleation phase")
    return _step(state, disc, dt, densities, mat, None)


def step_post_void(state: TreeStressState, disc: DiscretizedTree, dt: float,
                   densities: dict[int, float], mat: MaterialParams) -> np.ndarray:
    """One backward-Euler step with the void-surface sink at the
    nucleation node; returns new sigma."""
    if state.phase != POST_VOID or state.nuc_node is None:
        raise SolveError("step_post_void requires a nucleated state")
    return _step(state, disc, dt, densities, mat, state.nuc_node)


def detect_nucleation(sigma_old: np.ndarray, sigma_new: np.ndarray,
                      t_old: float, t_new: float,
                      mat: MaterialParams) -> tuple[int, float] | None:
    """First FD node at or above sigma_crit, with the crossing time
    linearly interpolated inside the step.  Ties break to the lowest
    node index."""
    crit = mat.sigma_crit
    above = sigma_new >= crit
    if not np.any(above):
        return None
    peak = sigma_new[above].max()
    node = int(np.flatnonzero(sigma_new >= peak)[0])
    s0, s1 = float(sigma_old[node]), float(sigma_new[node])
    if s1 > s0 and s0 < crit:
        frac = (crit - s0) / (s1 - s0)
    else:
        frac = 0.0
    return node, t_old + frac * (t_new - t_old)


def branch_of_node(disc: DiscretizedTree, fd_node: int) -> int:
    """Segment id owning an FD node (junctions: lowest incident sid)."""
    for b in disc.branches:
        if fd_node in b.fd_nodes:
            return b.sid
    raise SolveError(f"FD node {fd_node} not on any branch")


def void_volume(state: TreeStressState, disc: DiscretizedTree,
                mat: MaterialParams) -> float:
    """Trapezoidal integral of sigma/B times the cross-section over the
    remaining wire (excluding the current void span); negative interval
    contributions clamp to zero and are counted."""
    if state.phase != POST_VOID:
        raise SolveError("void_volume is defined in the post-void phase")
    span = 0.0
    if state.nuc_sid is not None and state.void_volume > 0.0:
        seg_area = next(b.area for b in disc.branches if b.sid == state.nuc_sid)
        span = state.void_volume / seg_area
    nuc_arc = None
    if state.nuc_sid is not None:
        b = next(b for b in disc.branches if b.sid == state.nuc_sid)
        idx = np.flatnonzero(b.fd_nodes == state.nuc_node)
        nuc_arc = disc.arc_pos[b.sid][idx[0]] if idx.size else None

    total = 0.0
    clamped = 0
    for b in disc.branches:
        sig = state.sigma[b.fd_nodes]
        contrib = 0.5 * (sig[:-1] + sig[1:]) / mat.bulk_modulus * b.area * b.h
        if b.sid == state.nuc_sid and nuc_arc is not None and span > 0.0:
            mids = disc.arc_pos[b.sid][:-1] + 0.5 * b.h
            contrib = np.where(np.abs(mids - nuc_arc) < span, 0.0, contrib)
        neg = contrib < 0
        clamped += int(neg.sum())
        total += float(contrib[~neg].sum())
    state.clamp_count += clamped
    return max(total, 0.0)


def critical_void_volume(seg, mat: MaterialParams) -> float:
    """V_crit = W * H * (lc_frac * L) of the nucleated segment."""
    return seg.width * seg.thickness * mat.lc_frac * seg.length


def delta_resistance(v_v: float, seg, mat: MaterialParams) -> float:
    """Void-induced resistance increase once the void exceeds V_crit:
    the voided span conducts through the barrier liner instead of copper.
    """
    v_crit = critical_void_volume(seg, mat)
    if v_v <= v_crit:
        return 0.0
    w, h = seg.width, seg.thickness
    bracket = mat.rho_ta / (mat.h_ta * (2.0 * h + w)) - mat.rho_cu / (h * w)
    if bracket <= 0:
        raise ConfigError(
            "barrier/copper resistivity ratio makes the voided span less "
            "resistive than copper; check rho_ta, h_ta against the geometry")
    return (v_v - v_crit) / (w * h) * bracket
