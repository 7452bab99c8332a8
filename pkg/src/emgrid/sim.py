"""Coupled aging loop: IR solve -> branch currents -> wire temperature
profiles -> stress step -> void growth -> resistance update.

Coupling is explicit operator splitting per time step: the conductance
matrix ages slowly relative to a single stress step, so the currents
driving the stress equation lag by one step.  Time advances on a
logarithmic schedule (stress evolves on log-time scales); immortal trees
are filtered once at t=0 and never stepped.  Temperature profiles are
recomputed lazily, only when a branch current density has drifted by
more than 1% since the profile was built, because the Joule term is the
only current-dependent piece.

Per-step work splits into a parallelizable per-tree phase (profiles and
the implicit stress step; nothing shared mutable) and a sequential
global phase (resistance commit and IR solve).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import mna, stress, thermal
from .errors import ConfigError
from .grid import PowerGrid
from .materials import Parameters

J_RETRIGGER = 0.01   # rebuild a tree's profiles when |dj/j| exceeds this


@dataclass
class SimulationConfig:
    params: Parameters
    thermal_map: thermal.ThermalMap | None = None
    ambient: float | None = None           # joule-only ambient override, K
    map_includes_joule: bool = False
    threads: int = 1                       # 0 = auto

    def __post_init__(self):
        if self.thermal_map is None and self.ambient is None:
            # fall back to the parameters-file ambient
            self.ambient = self.params.thermal.t_amb
        if self.threads < 0:
            raise ConfigError("threads must be >= 0")

    @property
    def worker_count(self) -> int:
        if self.threads == 0:
            return min(os.cpu_count() or 1, 8)
        return self.threads


@dataclass
class Checkpoint:
    time: float
    ir_max: dict[str, float]
    ir_p95: dict[str, float]
    resistance: dict[int, float]
    tree_max_sigma: dict[int, float]
    void_volumes: dict[int, float]


@dataclass
class TreeRecord:
    tree_id: int
    mortal: bool
    steady_max_sigma: float
    t_nuc: float | None = None
    nuc_segment: int | None = None
    t_vcrit: float | None = None      # void volume first exceeds V_crit
    t_fail: float | None = None       # dR or IR threshold crossing
    censored: bool = True

    def ttf(self, horizon: float) -> dict:
        """TTF decomposition t_nuc + t_inc + t_growth; censored parts
        are reported as lower bounds at the horizon."""
        if not self.mortal or self.t_nuc is None:
            return {"t_nuc": None, "t_inc": None, "t_growth": None,
                    "t_life": horizon, "censored": True}
        if self.t_vcrit is None:
            return {"t_nuc": self.t_nuc, "t_inc": None, "t_growth": None,
                    "t_life": horizon, "censored": True}
        if self.t_fail is None:
            return {"t_nuc": self.t_nuc, "t_inc": self.t_vcrit - self.t_nuc,
                    "t_growth": None, "t_life": horizon, "censored": True}
        return {"t_nuc": self.t_nuc,
                "t_inc": self.t_vcrit - self.t_nuc,
                "t_growth": self.t_fail - self.t_vcrit,
                "t_life": self.t_fail,
                "censored": False}


@dataclass
class SimulationResult:
    checkpoints: list[Checkpoint]
    trees: list[TreeRecord]
    chip_lifetime: float
    chip_failed: bool
    t_total: float
    final_time: float
    final_sigma: dict[int, np.ndarray]       # tree id -> stress at FD nodes
    tree_coords: dict[int, np.ndarray]       # tree id -> FD node (x, y), m
    tree_temps: dict[int, np.ndarray]        # tree id -> FD node T, K
    final_drops: dict[int, float]            # node id -> V
    final_densities: dict[int, float]        # segment id -> A/m^2
    clamp_counts: dict[int, int] = field(default_factory=dict)

    @property
    def mortal_count(self) -> int:
        return sum(1 for t in self.trees if t.mortal)


def time_schedule(t_total: float, t_start_frac: float,
                  steps_per_decade: int) -> np.ndarray:
    """Logarithmically growing step times: 0, then decade blocks from
    t_start = t_total * t_start_frac up to t_total.

    Within one decade the step size is constant, so the implicit solver
    can reuse its factorization across the whole block; dt grows 10x
    from decade to decade.
    """
    t_start = t_total * t_start_frac
    times = [0.0, t_start]
    t = t_start
    while t < t_total * (1.0 - 1e-12):
        t_next = min(10.0 * t, t_total)
        n = max(1, int(math.ceil(steps_per_decade * math.log10(t_next / t))))
        dt = (t_next - t) / n
        times.extend(t + i * dt for i in range(1, n + 1))
        t = times[-1]
    return np.asarray(times)


def build_profiles(grid: PowerGrid, cfg: SimulationConfig,
                   sids) -> dict[int, thermal.TemperatureProfile]:
    p = cfg.params.thermal
    out = {}
    for sid in sids:
        seg = grid.segments[sid]
        if cfg.thermal_map is not None:
            out[sid] = thermal.segment_profile(
                seg, cfg.thermal_map, p, grid,
                include_joule=not cfg.map_includes_joule)
        else:
            pp = thermal.ThermalParams(p.k_cu, p.k_ild, p.t_ild, cfg.ambient)
            out[sid] = thermal.segment_profile(seg, None, pp, grid)
    return out


@dataclass
class _TreeWork:
    tree: object
    disc: stress.DiscretizedTree
    state: stress.TreeStressState
    record: TreeRecord
    profiles: dict
    j_at_profile: dict[int, float]


def _refresh_profiles(work: _TreeWork, grid: PowerGrid, cfg: SimulationConfig,
                      densities: dict[int, float]) -> None:
    stale = any(abs(densities[sid] - work.j_at_profile[sid]) >
                J_RETRIGGER * max(abs(work.j_at_profile[sid]), 1.0)
                for sid in work.tree.segments)
    if stale:
        work.profiles = build_profiles(grid, cfg, work.tree.segments)
        work.disc = stress.discretize(work.tree, grid, work.profiles,
                                      cfg.params.material, cfg.params.solver)
        work.j_at_profile = {sid: densities[sid] for sid in work.tree.segments}


def _step_tree(work: _TreeWork, grid: PowerGrid, cfg: SimulationConfig,
               t_old: float, t_new: float, densities: dict[int, float]) -> None:
    mat = cfg.params.material
    _refresh_profiles(work, grid, cfg, densities)
    dt = t_new - t_old
    dens = {sid: densities[sid] for sid in work.tree.segments}
    st = work.state
    if st.phase == stress.NUCLEATION:
        sigma_new = stress.step_nucleation(st, work.disc, dt, dens, mat)
        hit = stress.detect_nucleation(st.sigma, sigma_new, t_old, t_new, mat)
        st.sigma = sigma_new
        if hit is not None:
            node, t_nuc = hit
            st.phase = stress.POST_VOID
            st.t_nuc = t_nuc
            st.nuc_node = node
            st.nuc_sid = stress.branch_of_node(work.disc, node)
            work.record.t_nuc = t_nuc
            work.record.nuc_segment = st.nuc_sid
            work.disc._fact = None   # operator changes shape of dynamics
    else:
        st.sigma = stress.step_post_void(st, work.disc, dt, dens, mat)

    if st.phase == stress.POST_VOID:
        st.void_volume = stress.void_volume(st, work.disc, mat)
        seg = grid.segments[st.nuc_sid]
        v_crit = stress.critical_void_volume(seg, mat)
        if work.record.t_vcrit is None and st.void_volume > v_crit:
            work.record.t_vcrit = t_new
        # voids do not shrink: dR ratchets so resistance is non-decreasing
        st.delta_r[st.nuc_sid] = max(
            st.delta_r.get(st.nuc_sid, 0.0),
            stress.delta_resistance(st.void_volume, seg, mat))


def run(grid: PowerGrid, cfg: SimulationConfig) -> SimulationResult:
    """Execute the coupled aging simulation."""
    mat = cfg.params.material
    solver = cfg.params.solver

    resistances = {sid: seg.r0 for sid, seg in grid.segments.items()}
    sys = mna.assemble(grid, resistances)
    mna.solve(sys)
    densities = {sid: d for sid, (i, d) in mna.branch_currents(sys, grid).items()}
    for sid, seg in grid.segments.items():
        seg.density = densities[sid]

    # t = 0: discretize, steady-state filter, keep geometry snapshots
    works: list[_TreeWork] = []
    records: list[TreeRecord] = []
    tree_coords, tree_temps, final_sigma = {}, {}, {}
    for tree in grid.trees:
        profiles = build_profiles(grid, cfg, tree.segments)
        disc = stress.discretize(tree, grid, profiles, mat, solver)
        tree_coords[tree.id] = disc.coords
        tree_temps[tree.id] = disc.temps
        final_sigma[tree.id] = np.full(disc.n, mat.sigma_thermal)
        sigma_ss = stress.steady_state_stress(disc, grid, profiles, densities, mat)
        mortal = bool(sigma_ss.max() >= mat.sigma_crit)
        rec = TreeRecord(tree.id, mortal, float(sigma_ss.max()))
        records.append(rec)
        if mortal:
            works.append(_TreeWork(tree, disc, stress.initial_state(disc, mat),
                                   rec, profiles,
                                   {sid: densities[sid] for sid in tree.segments}))

    times = time_schedule(solver.t_total, solver.t_start_frac,
                          solver.steps_per_decade)
    ckpt_every = max(1, solver.steps_per_decade // solver.checkpoints_per_decade)

    pad_v = {net: grid.pad_voltage(net) for net in grid.nets()}
    checkpoints: list[Checkpoint] = []
    chip_fail_time: float | None = None

    def record_checkpoint(t: float):
        drops = mna.ir_drop_map(sys, grid)
        per_net: dict[str, list[float]] = {}
        for nid, d in drops.items():
            per_net.setdefault(grid.nodes[nid].net, []).append(d)
        checkpoints.append(Checkpoint(
            time=t,
            ir_max={net: max(v) for net, v in per_net.items()},
            ir_p95={net: float(np.percentile(v, 95)) for net, v in per_net.items()},
            resistance=dict(resistances),
            tree_max_sigma={w.tree.id: float(w.state.sigma.max()) for w in works},
            void_volumes={w.tree.id: w.state.void_volume for w in works},
        ))

    record_checkpoint(0.0)
    final_time = 0.0

    pool = (ThreadPoolExecutor(max_workers=cfg.worker_count)
            if cfg.worker_count > 1 and len(works) > 1 else None)
    try:
        for k in range(1, len(times)):
            t_old, t_new = float(times[k - 1]), float(times[k])

            if pool is not None:
                list(pool.map(
                    lambda w: _step_tree(w, grid, cfg, t_old, t_new, densities),
                    works))
            else:
                for w in works:
                    _step_tree(w, grid, cfg, t_old, t_new, densities)

            # global phase: commit resistances, re-solve the grid
            changed = False
            for w in works:
                for sid, dr in w.state.delta_r.items():
                    new_r = grid.segments[sid].r0 + dr
                    if new_r != resistances[sid]:
                        resistances[sid] = new_r
                        changed = True
            if changed:
                sys = mna.assemble(grid, resistances, previous=sys)
                mna.solve(sys)
                densities = {sid: d
                             for sid, (i, d) in mna.branch_currents(sys, grid).items()}

            # failure bookkeeping
            ir_now = mna.max_ir_drop_per_net(sys, grid)
            ir_failed = any(ir_now[net] > solver.ir_fail_frac * pad_v[net]
                            for net in ir_now)
            if ir_failed and chip_fail_time is None:
                chip_fail_time = t_new
            for w in works:
                if w.record.t_fail is None and w.record.t_vcrit is not None:
                    dr_fail = any(
                        dr > solver.dr_fail_frac * grid.segments[sid].r0
                        for sid, dr in w.state.delta_r.items())
                    if dr_fail or ir_failed:
                        w.record.t_fail = t_new
                        w.record.censored = False

            final_time = t_new
            if (k % ckpt_every == 0 or k == len(times) - 1
                    or chip_fail_time == t_new):
                record_checkpoint(t_new)
            if chip_fail_time is not None:
                break
    finally:
        if pool is not None:
            pool.shutdown()

    for w in works:
        final_sigma[w.tree.id] = w.state.sigma

    drops = mna.ir_drop_map(sys, grid)
    return SimulationResult(
        checkpoints=checkpoints,
        trees=records,
        chip_lifetime=chip_fail_time if chip_fail_time is not None
        else solver.t_total,
        chip_failed=chip_fail_time is not None,
        t_total=solver.t_total,
        final_time=final_time,
        final_sigma=final_sigma,
        tree_coords=tree_coords,
        tree_temps=tree_temps,
        final_drops=drops,
        final_densities=densities,
        clamp_counts={w.tree.id: w.state.clamp_count for w in works},
    )


def compute_ttf(record: TreeRecord, t_total: float) -> dict:
    """Per-tree TTF decomposition (see TreeRecord.ttf)."""
    return record.ttf(t_total)


def chip_lifetime(result: SimulationResult) -> float:
    """Earliest IR-threshold crossing; censored at the horizon."""
    return result.chip_lifetime
