"""Wire temperature modeling: thermal maps, Joule heating, and the
stationary heat balance on a single interconnect segment.

The per-wire steady temperature obeys

    k_cu * T'' - k_cu * (T - T_amb) / Gamma^2 + j^2 * rho = 0

where the second term is heat lost to the surrounding dielectric and the
third is Joule heating.  Gamma is the thermal characteristic length

    Gamma = sqrt(t_cu * t_ILD * k_cu / k_ILD).

With endpoint temperatures T(-L/2)=T1, T(+L/2)=T2 and ambient equal to
the endpoint mean T0=(T1+T2)/2, the closed form is

    T(x) = T0 + Tm * (1 - cosh(x/G)/cosh(L/2G)) + Tn * sinh(x/G)/sinh(L/2G)

with Tm = rho*j^2*G^2/k_cu and Tn = (T2-T1)/2.  Note the antisymmetric
coefficient: Tn = (T2-T1)/2 is required for the profile to actually hit
T1 at x=-L/2 and T2 at x=+L/2 (sinh is odd).

Spatial temperature data enters as a rectangular gridded map sampled
bilinearly at segment endpoints.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .constants import UM
from .errors import ConfigError, SolveError
from .grid import PowerGrid, WireSegment


@dataclass(frozen=True)
class ThermalParams:
    k_cu: float = 400.0     # W/(m*K) wire thermal conductivity
    k_ild: float = 1.0      # W/(m*K) dielectric conductivity
    t_ild: float = 0.2e-6   # m dielectric thickness
    t_amb: float = 350.0    # K ambient (used in joule-only mode)

    def __post_init__(self):
        if min(self.k_cu, self.k_ild, self.t_ild, self.t_amb) <= 0:
            raise ConfigError("thermal parameters must all be positive")


@dataclass(frozen=True)
class ThermalMap:
    x0: float   # m, origin of grid cell (0,0)
    y0: float   # m
    dx: float   # m, pitch
    dy: float   # m
    temps: np.ndarray   # shape (ny, nx), Kelvin

    def __post_init__(self):
        ny, nx = self.temps.shape
        if nx < 2 or ny < 2:
            raise ConfigError("thermal map needs at least a 2x2 grid")
        if self.dx <= 0 or self.dy <= 0:
            raise ConfigError("thermal map pitch must be positive")
        if np.any(self.temps <= 0):
            raise ConfigError("thermal map temperatures must be positive (Kelvin)")

    @property
    def mean(self) -> float:
        return float(self.temps.mean())


def load_thermal_map(text: str) -> ThermalMap:
    """Read the thermal map file format.

    Line 1: ``x0 y0 dx dy nx ny`` (micrometers for lengths), then ny rows
    of nx comma-separated Kelvin values, row-major from y0.
    """
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise ConfigError("thermal map file is empty")
    head = lines[0].split()
    if len(head) != 6:
        raise ConfigError("thermal map header must be 'x0 y0 dx dy nx ny'")
    x0, y0, dx, dy = (float(v) * UM for v in head[:4])
    nx, ny = int(head[4]), int(head[5])
    if len(lines) - 1 != ny:
        raise ConfigError(f"thermal map expects {ny} data rows, got {len(lines) - 1}")
    rows = []
    for ln in lines[1:]:
        vals = [float(v) for v in ln.split(",")]
        if len(vals) != nx:
            raise ConfigError(f"thermal map row has {len(vals)} values, expected {nx}")
        rows.append(vals)
    return ThermalMap(x0, y0, dx, dy, np.asarray(rows, dtype=float))


def dump_thermal_map(tm: ThermalMap) -> str:
    ny, nx = tm.temps.shape
    out = io.StringIO()
    out.write(f"{tm.x0 / UM:.9g} {tm.y0 / UM:.9g} {tm.dx / UM:.9g} "
              f"{tm.dy / UM:.9g} {nx} {ny}\n")
    for row in tm.temps:
        out.write(",".join(f"{v:.9g}" for v in row) + "\n")
    return out.getvalue()


def sample_temperature(tm: ThermalMap, x: float, y: float) -> float:
    """Bilinear interpolation at (x, y) in meters.

    Points up to half a pitch outside the grid are clamped to the edge;
    farther out is an error.
    """
    ny, nx = tm.temps.shape
    fx = (x - tm.x0) / tm.dx
    fy = (y - tm.y0) / tm.dy
    if fx < -0.5 or fx > nx - 0.5 or fy < -0.5 or fy > ny - 0.5:
        raise ConfigError(
            f"query point ({x / UM:.3g}, {y / UM:.3g}) um outside thermal map")
    fx = min(max(fx, 0.0), nx - 1.0)
    fy = min(max(fy, 0.0), ny - 1.0)
    i0 = min(int(fx), nx - 2)
    j0 = min(int(fy), ny - 2)
    tx = fx - i0
    ty = fy - j0
    t = tm.temps
    return float((1 - tx) * (1 - ty) * t[j0, i0] + tx * (1 - ty) * t[j0, i0 + 1]
                 + (1 - tx) * ty * t[j0 + 1, i0] + tx * ty * t[j0 + 1, i0 + 1])


def characteristic_length(seg: WireSegment, p: ThermalParams) -> float:
    """Gamma = sqrt(t_cu * t_ILD * k_cu / k_ILD), in meters."""
    return math.sqrt(seg.thickness * p.t_ild * p.k_cu / p.k_ild)


@dataclass(frozen=True)
class TemperatureProfile:
    """Closed-form steady temperature along one segment.

    Local coordinate runs x in [-L/2, +L/2] with T(-L/2)=t1 at the
    segment's n1 end and T(+L/2)=t2 at n2.
    """
    t1: float
    t2: float
    tm: float       # Joule bump amplitude, K
    gamma: float    # m
    length: float   # m

    @property
    def t0(self) -> float:
        return 0.5 * (self.t1 + self.t2)

    @property
    def tn(self) -> float:
        # antisymmetric endpoint split; see module docstring
        return 0.5 * (self.t2 - self.t1)

    def temperature(self, x):
        """T(x); accepts scalars or arrays of local coordinate in meters."""
        x = np.asarray(x, dtype=float)
        g = self.gamma
        half = 0.5 * self.length
        t = (self.t0
             + self.tm * (1.0 - np.cosh(x / g) / np.cosh(half / g))
             + self.tn * np.sinh(x / g) / np.sinh(half / g))
        return float(t) if t.ndim == 0 else t

    def gradient(self, x):
        """dT/dx, analytic."""
        x = np.asarray(x, dtype=float)
        g = self.gamma
        half = 0.5 * self.length
        dt = (-self.tm * np.sinh(x / g) / (g * np.cosh(half / g))
              + self.tn * np.cosh(x / g) / (g * np.sinh(half / g)))
        return float(dt) if dt.ndim == 0 else dt


def segment_profile(seg: WireSegment, tm_map: ThermalMap | None, p: ThermalParams,
                    grid: PowerGrid, j: float | None = None,
                    include_joule: bool = True) -> TemperatureProfile:
    """Build the temperature profile of one segment.

    Endpoint temperatures come from the thermal map at the node
    coordinates; with no map, both ends sit at the ambient (joule-only
    mode).  ``include_joule=False`` suppresses the self-heating bump,
    for maps that already embed Joule heating.
    """
    if j is None:
        j = seg.density
    if tm_map is not None:
        n1 = grid.nodes[seg.n1]
        n2 = grid.nodes[seg.n2]
        t1 = sample_temperature(tm_map, n1.x, n1.y)
        t2 = sample_temperature(tm_map, n2.x, n2.y)
    else:
        t1 = t2 = p.t_amb
    gamma = characteristic_length(seg, p)
    bump = seg.rho * j * j * gamma * gamma / p.k_cu if include_joule else 0.0
    return TemperatureProfile(t1, t2, bump, gamma, seg.length)


def joule_only_profiles(grid: PowerGrid, p: ThermalParams,
                        ambient: float | None = None) -> dict[int, TemperatureProfile]:
    """Profiles with uniform boundary temperature plus per-segment Joule bump."""
    t_amb = p.t_amb if ambient is None else ambient
    pp = ThermalParams(p.k_cu, p.k_ild, p.t_ild, t_amb)
    return {sid: segment_profile(seg, None, pp, grid)
            for sid, seg in grid.segments.items()}


def solve_stationary_fdm(seg: WireSegment, p: ThermalParams, t1: float, t2: float,
                         j: float, n: int, t_amb: float | None = None) -> np.ndarray:
    """Central-difference solve of the stationary heat balance on one wire.

    Dirichlet ends T(-L/2)=t1, T(+L/2)=t2; returns the n nodal
    temperatures on the uniform grid.  Defaults the ambient to the
    endpoint mean, which makes the closed-form profile the exact
    solution.
    """
    if n < 3:
        raise ConfigError("stationary FDM needs at least 3 nodes")
    if t_amb is None:
        t_amb = 0.5 * (t1 + t2)
    gamma = characteristic_length(seg, p)
    h = seg.length / (n - 1)
    m = n - 2
    inv_g2 = 1.0 / (gamma * gamma)
    # banded tridiagonal system for interior nodes
    ab = np.zeros((3, m))
    ab[0, 1:] = 1.0 / (h * h)
    ab[1, :] = -2.0 / (h * h) - inv_g2
    ab[2, :-1] = 1.0 / (h * h)
    rhs = np.full(m, -(j * j * seg.rho / p.k_cu) - t_amb * inv_g2)
    rhs[0] -= t1 / (h * h)
    rhs[-1] -= t2 / (h * h)
    try:
        interior = scipy.linalg.solve_banded((1, 1), ab, rhs)
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - guarded, Gamma^2 > 0
        raise SolveError(f"singular stationary thermal system: {exc}") from exc
    return np.concatenate(([t1], interior, [t2]))
