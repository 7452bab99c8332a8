"""Material constants and the key=value parameters file.

The parameters file is line oriented, ``key = value`` with ``#``
comments.  Unknown keys are hard errors, so typos cannot silently fall
back to defaults.  Units per key (SI unless noted):

    ez_eff          C       effective charge number times elementary charge
    atomic_volume   m^3
    bulk_modulus    Pa      effective modulus B in the diffusivity and void integral
    d0              m^2/s   diffusivity prefactor
    ea              eV      activation energy
    kb              eV/K    Boltzmann constant (override only for experiments)
    q_transport     eV      heat of transport driving thermomigration (0 disables)
    delta_surface   m       void surface thickness (post-void boundary condition)
    sigma_crit      Pa      void nucleation threshold stress
    sigma_thermal   Pa      initial thermal residual stress
    rho_cu          ohm*m   copper resistivity
    rho_ta          ohm*m   Ta/TaN barrier resistivity
    h_ta            m       barrier thickness
    lc_frac         -       critical void length as a fraction of the nucleated
                            segment length (V_crit = W*H*lc_frac*L)
    em_polarity     -       +1: tensile stress grows at the end electrons enter
                            (downstream of conventional current); -1 flips it
    k_cu            W/(m*K) wire thermal conductivity
    k_ild           W/(m*K) dielectric thermal conductivity
    t_ild           m       dielectric thickness
    t_amb           K       ambient temperature for joule-only mode
    dx_min          m       finite-difference spacing floor
    dx_max          m       finite-difference spacing cap
    dx_div          -       target FD intervals per branch (dx = L/dx_div, capped)
    t_total         s       simulation horizon
    t_start_frac    -       first time step at t_total * t_start_frac
    steps_per_decade     -  implicit solver steps per decade of time
    checkpoints_per_decade -  recorded checkpoints per decade
    ir_fail_frac    -       chip failure when max IR drop exceeds this fraction
                            of the pad voltage
    dr_fail_frac    -       tree failure when dR exceeds this multiple of R0
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

from .constants import KB_EV, QE
from .errors import ConfigError
from .thermal import ThermalParams


@dataclass(frozen=True)
class MaterialParams:
    ez_eff: float = 10.0 * QE        # C
    atomic_volume: float = 1.182e-29  # m^3
    bulk_modulus: float = 1.0e11     # Pa
    d0: float = 7.56e-5              # m^2/s
    ea: float = 0.84                 # eV
    kb: float = KB_EV                # eV/K
    q_transport: float = 0.094       # eV
    delta_surface: float = 1.0e-9    # m
    sigma_crit: float = 5.0e8        # Pa
    sigma_thermal: float = 4.0e8     # Pa
    rho_cu: float = 2.2e-8           # ohm*m
    rho_ta: float = 2.0e-6           # ohm*m
    h_ta: float = 5.0e-9             # m
    lc_frac: float = 0.01
    em_polarity: float = 1.0

    def __post_init__(self):
        positive = ["ez_eff", "atomic_volume", "bulk_modulus", "d0", "ea", "kb",
                    "delta_surface", "sigma_crit", "sigma_thermal",
                    "rho_cu", "rho_ta", "h_ta", "lc_frac"]
        for name in positive:
            if getattr(self, name) <= 0:
                raise ConfigError(f"material parameter {name} must be positive")
        if self.q_transport < 0:
            raise ConfigError("q_transport must be >= 0 (0 disables "
                              "thermomigration)")
        if self.sigma_crit <= self.sigma_thermal:
            raise ConfigError("sigma_crit must exceed sigma_thermal for a "
                              "meaningful nucleation phase")
        if self.rho_ta <= self.rho_cu:
            raise ConfigError("barrier resistivity rho_ta must exceed rho_cu")
        if abs(self.em_polarity) != 1.0:
            raise ConfigError("em_polarity must be +1 or -1")


@dataclass
class SolverSettings:
    dx_min: float = 0.05e-6
    dx_max: float = 1.0e-6
    dx_div: int = 50
    t_total: float = 1.0e9
    t_start_frac: float = 1.0e-6
    steps_per_decade: int = 50
    checkpoints_per_decade: int = 10
    ir_fail_frac: float = 0.10
    dr_fail_frac: float = 10.0

    def __post_init__(self):
        if self.t_total <= 0:
            raise ConfigError("t_total must be positive")
        if not (0 < self.dx_min <= self.dx_max):
            raise ConfigError("need 0 < dx_min <= dx_max")
        if self.steps_per_decade < 1 or self.checkpoints_per_decade < 1:
            raise ConfigError("per-decade counts must be >= 1")
        if not 0 < self.ir_fail_frac < 1:
            raise ConfigError("ir_fail_frac must be in (0, 1)")
        if self.dr_fail_frac <= 0:
            raise ConfigError("dr_fail_frac must be positive")


@dataclass
class Parameters:
    material: MaterialParams = field(default_factory=MaterialParams)
    thermal: ThermalParams = field(default_factory=ThermalParams)
    solver: SolverSettings = field(default_factory=SolverSettings)


_MAT_KEYS = {f.name for f in fields(MaterialParams)}
_THERM_KEYS = {f.name for f in fields(ThermalParams)}
_SOLVER_KEYS = {f.name for f in fields(SolverSettings)}
_INT_KEYS = {"dx_div", "steps_per_decade", "checkpoints_per_decade"}


def parse_parameters(text: str) -> Parameters:
    """Parse a parameters file; unknown keys raise ConfigError."""
    mat, therm, solv = {}, {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"parameters line {lineno}: expected key = value")
        key, _, val = line.partition("=")
        key = key.strip().lower()
        val = val.strip()
        try:
            num = int(val) if key in _INT_KEYS else float(val)
        except ValueError:
            raise ConfigError(f"parameters line {lineno}: bad number {val!r}") from None
        if key in _MAT_KEYS:
            mat[key] = float(num)
        elif key in _THERM_KEYS:
            therm[key] = float(num)
        elif key in _SOLVER_KEYS:
            solv[key] = num
        else:
            raise ConfigError(f"parameters line {lineno}: unknown key {key!r}")
    return Parameters(MaterialParams(**mat), ThermalParams(**therm),
                      SolverSettings(**solv))


def dump_parameters(p: Parameters) -> str:
    lines = []
    for section in (p.material, p.thermal, p.solver):
        for f in fields(section):
            v = getattr(section, f.name)
            lines.append(f"{f.name} = {v:.9g}" if isinstance(v, float)
                         else f"{f.name} = {v}")
    return "\n".join(lines) + "\n"
