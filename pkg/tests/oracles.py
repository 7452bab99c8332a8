"""Independent reference implementations used only to generate expected
values for tests.  These deliberately share no code with the package:
assembly is done with plain Python loops and their own numbering.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

KB_J = 1.380649e-23
KB_EV = 8.617333262e-5
QE = 1.602176634e-19


# ------------------------------------------------------------- tree count

def count_trees_union_find(grid) -> int:
    """Union-find over (segment) pairs sharing a node on the same layer."""
    labels = {}

    def root(s):
        while labels[s] != s:
            s = labels[s]
        return s

    sids = list(grid.segments)
    for s in sids:
        labels[s] = s
    for i, a in enumerate(sids):
        for b in sids[i + 1:]:
            sa, sb = grid.segments[a], grid.segments[b]
            if sa.layer != sb.layer:
                continue
            if {sa.n1, sa.n2} & {sb.n1, sb.n2}:
                ra, rb = root(a), root(b)
                if ra != rb:
                    labels[ra] = rb
    return len({root(s) for s in sids})


# ------------------------------------------------------------- dense MNA

def dense_mna(grid, resistances=None):
    """Dense stamping + numpy solve; returns (unknown ids, G, rhs, u)."""
    res = {sid: (resistances[sid] if resistances else seg.r0)
           for sid, seg in grid.segments.items()}
    unknown = [nid for nid in sorted(grid.nodes) if nid not in grid.pads]
    pos = {nid: k for k, nid in enumerate(unknown)}
    n = len(unknown)
    g = np.zeros((n, n))
    rhs = np.zeros(n)
    elements = [(seg.n1, seg.n2, 1.0 / res[sid])
                for sid, seg in grid.segments.items()]
    elements += [(v.lower, v.upper, 1.0 / v.resistance)
                 for v in grid.vias.values()]
    for a, b, cond in elements:
        for u, v in ((a, b), (b, a)):
            if u in pos:
                g[pos[u], pos[u]] += cond
                if v in pos:
                    g[pos[u], pos[v]] -= cond
                else:
                    rhs[pos[u]] += cond * grid.pads[v]
    for nid, current in grid.loads.items():
        if nid in pos:
            rhs[pos[nid]] -= current
    u = np.linalg.solve(g, rhs)
    return unknown, g, rhs, u


# ----------------------------------------------------- bilinear sampling

def bilinear_reference(tmap, x, y) -> float:
    """Nearest-4 weighted average, written from the definition."""
    t = tmap.temps
    ny, nx = t.shape
    gx = (x - tmap.x0) / tmap.dx
    gy = (y - tmap.y0) / tmap.dy
    gx = min(max(gx, 0.0), nx - 1.0)
    gy = min(max(gy, 0.0), ny - 1.0)
    i = min(int(np.floor(gx)), nx - 2)
    j = min(int(np.floor(gy)), ny - 2)
    wx, wy = gx - i, gy - j
    corners = [(t[j, i], (1 - wx) * (1 - wy)), (t[j, i + 1], wx * (1 - wy)),
               (t[j + 1, i], (1 - wx) * wy), (t[j + 1, i + 1], wx * wy)]
    return sum(v * w for v, w in corners)


# --------------------------------------------- brute-force stress solver

class BruteForceStress:
    """Fine-grid backward-Euler reference for the tree stress equation.

    Owns its numbering and assembly: every branch is chopped into
    ``refine`` times more intervals than the target spacing would give,
    junction nodes are merged by grid-node id, and each interval's flux

        kappa * ((s_right - s_left)/h - S - M)

    is accumulated +into the left node and -into the right node with
    dual-cell weights.  Optionally a void sink kappa*sigma/delta at one
    node.  Time advances on the supplied schedule with each interval
    split into ``refine`` equal substeps.
    """

    def __init__(self, grid, tree, profiles, densities, mat,
                 dx_div=50, dx_min=0.05e-6, dx_max=1.0e-6, refine=10):
        self.mat = mat
        self.node_of = {}
        coords = []
        cell = []

        def node_for(key):
            if key not in self.node_of:
                self.node_of[key] = len(cell)
                cell.append(0.0)
            return self.node_of[key]

        rows, cols, vals = [], [], []
        drive = []   # (left, right, kappa, S_term, M_term)
        self.branch_nodes = {}
        for sid in tree.segments:
            seg = grid.segments[sid]
            prof = profiles[sid]
            base_dx = min(max(seg.length / dx_div, dx_min), dx_max)
            m = max(2, int(np.ceil(seg.length / base_dx))) * refine
            h = seg.length / m
            ids = [node_for(("g", seg.n1))]
            for k in range(1, m):
                ids.append(node_for(("i", sid, k)))
            ids.append(node_for(("g", seg.n2)))
            self.branch_nodes[sid] = (ids, h)
            j = densities[sid]
            s_drive = mat.em_polarity * mat.ez_eff * seg.rho / mat.atomic_volume * j
            for k in range(m):
                xm = -seg.length / 2 + (k + 0.5) * h
                tm = prof.temperature(xm)
                dtm = prof.gradient(xm)
                d_a = mat.d0 * np.exp(-mat.ea / (KB_EV * tm))
                kap = d_a * mat.bulk_modulus * mat.atomic_volume / (KB_J * tm)
                m_drive = (mat.q_transport * QE / (mat.atomic_volume * tm)) * dtm
                p, q = ids[k], ids[k + 1]
                rows += [p, p, q, q]
                cols += [p, q, q, p]
                vals += [-kap / h, kap / h, -kap / h, kap / h]
                drive.append((p, q, kap * (s_drive + m_drive)))
                cell[p] += h / 2
                cell[q] += h / 2

        n = len(cell)
        self.n = n
        self.cell = np.array(cell)
        self.a = sp.csc_matrix(sp.coo_matrix((vals, (rows, cols)), shape=(n, n)))
        f = np.zeros(n)
        for p, q, val in drive:
            f[p] -= val
            f[q] += val
        self.forcing = f    # constant part of d(sigma)/dt * cell

    def evolve(self, sigma0: float, times, refine=10, sink_node=None):
        """Backward Euler over the refined schedule; returns final sigma."""
        sigma = np.full(self.n, float(sigma0))
        a = self.a
        if sink_node is not None:
            a = a.tolil(copy=True)
            # kappa at the sink node: use the max incident interface value
            kloc = self._kappa_at(sink_node)
            a[sink_node, sink_node] -= kloc / self.mat.delta_surface
            a = a.tocsc()
        c = sp.diags(self.cell).tocsc()
        for k in range(1, len(times)):
            sub = np.linspace(times[k - 1], times[k], refine + 1)
            for s in range(refine):
                dt = sub[s + 1] - sub[s]
                lu = spla.splu((c - dt * a).tocsc())
                sigma = lu.solve(self.cell * sigma + dt * self.forcing)
        return sigma

    def _kappa_at(self, node):
        col = self.a[:, node].toarray().ravel()
        col[node] = 0.0
        # off-diagonal entries are kappa/h; recover kappa with the matching h
        best = 0.0
        for sid, (ids, h) in self.branch_nodes.items():
            ids = np.asarray(ids)
            where = np.flatnonzero(ids == node)
            for w in where:
                for nb in (w - 1, w + 1):
                    if 0 <= nb < len(ids):
                        best = max(best, abs(col[ids[nb]]) * h)
        return best

    def sample_on(self, other_nodes):
        """Map of (key -> index) shared with the production grid: the
        production FD nodes at grid nodes and the same arc fractions."""
        return self.node_of


def steady_state_quadrature(grid, tree, profiles, densities, mat, n_fine=4000):
    """Steady state by fine path quadrature on a single-branch tree."""
    assert len(tree.segments) == 1
    sid = tree.segments[0]
    seg = grid.segments[sid]
    prof = profiles[sid]
    xs = np.linspace(-seg.length / 2, seg.length / 2, n_fine)
    t = prof.temperature(xs)
    s_drive = (mat.em_polarity * mat.ez_eff * seg.rho / mat.atomic_volume
               * densities[sid])
    m_drive = (mat.q_transport * QE / (mat.atomic_volume * t)) * prof.gradient(xs)
    integrand = s_drive + m_drive
    sigma = np.concatenate([[0.0], np.cumsum(
        0.5 * (integrand[1:] + integrand[:-1]) * np.diff(xs))])
    sigma += mat.sigma_thermal - np.trapezoid(sigma, xs) / seg.length
    return xs, sigma
