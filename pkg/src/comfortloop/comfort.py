"""Analytic Fanger thermal-comfort engine.

Vapor pressure (Magnus-Tetens), clothing surface temperature by Newton
iteration, convective coefficient, PMV and the five ISO 7730 comfort bands.

Relative humidity is a fraction in [0, 1] everywhere in this module; the
percent form only exists at the user-facing boundaries (files and CLI).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .errors import NonConvergence

MET_WM2 = 58.15
CLO_M2KW = 0.155
STEFAN_TERM = 3.96e-8

# Lower and upper branch of the clothing area factor meet here exactly.
FCL_BREAKPOINT = 0.05 / 0.645

PMV_MIN = -4.0
PMV_MAX = 4.0

TCL_INITIAL_GUESS = 25.0
TCL_TOLERANCE = 1e-5
TCL_MAX_ITERATIONS = 100
FD_STEP = 1e-4

DEFAULT_AIR_VELOCITY = 0.1


class ComfortClass(enum.Enum):
    COLD = "Cold"
    COOL = "Cool"
    COMFORTABLE = "Comfortable"
    WARM = "Warm"
    HOT = "Hot"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class EnvironmentSample:
    air_temp_c: float
    rel_humidity: float
    air_velocity_ms: float = DEFAULT_AIR_VELOCITY
    mean_radiant_temp_c: float | None = None

    def __post_init__(self):
        if not math.isfinite(self.air_temp_c) or not -40.0 <= self.air_temp_c <= 80.0:
            raise ValueError(f"air temperature {self.air_temp_c} outside [-40, 80] C")
        if not 0.0 <= self.rel_humidity <= 1.0:
            raise ValueError(f"relative humidity {self.rel_humidity} outside [0, 1]")
        if not self.air_velocity_ms >= 0.0:
            raise ValueError(f"air velocity {self.air_velocity_ms} must be >= 0")
        if self.mean_radiant_temp_c is None:
            object.__setattr__(self, "mean_radiant_temp_c", self.air_temp_c)
        elif not math.isfinite(self.mean_radiant_temp_c):
            raise ValueError("mean radiant temperature must be finite")

    @classmethod
    def from_percent(cls, air_temp_c: float, rh_pct: float, **kwargs) -> "EnvironmentSample":
        if not 0.0 <= rh_pct <= 100.0:
            raise ValueError(f"relative humidity {rh_pct}% outside [0, 100]")
        return cls(air_temp_c, rh_pct / 100.0, **kwargs)


def clothing_area_factor(icl: float) -> float:
    """Ratio of clothed to nude body surface area for insulation ``icl`` (m2K/W)."""
    if icl < 0:
        raise ValueError("clothing insulation must be >= 0")
    if icl <= FCL_BREAKPOINT:
        return 1.00 + 1.290 * icl
    return 1.05 + 0.645 * icl


@dataclass(frozen=True)
class OccupantProfile:
    metabolic_rate_wm2: float = 1.2 * MET_WM2
    mechanical_work_wm2: float = 0.0
    clothing_insulation_m2kw: float = 0.5 * CLO_M2KW
    clothing_area_factor: float = field(init=False)

    def __post_init__(self):
        if not self.metabolic_rate_wm2 > 0:
            raise ValueError("metabolic rate must be > 0")
        if not self.mechanical_work_wm2 >= 0:
            raise ValueError("mechanical work must be >= 0")
        if not self.metabolic_rate_wm2 > self.mechanical_work_wm2:
            raise ValueError("metabolic rate must exceed mechanical work")
        if not self.clothing_insulation_m2kw >= 0:
            raise ValueError("clothing insulation must be >= 0")
        object.__setattr__(
            self, "clothing_area_factor", clothing_area_factor(self.clothing_insulation_m2kw)
        )

    @classmethod
    def from_met_clo(cls, met: float, clo: float, work_wm2: float = 0.0) -> "OccupantProfile":
        return cls(met * MET_WM2, work_wm2, clo * CLO_M2KW)

    @property
    def skin_temp_c(self) -> float:
        return 35.7 - 0.028 * (self.metabolic_rate_wm2 - self.mechanical_work_wm2)


DEFAULT_OCCUPANT = OccupantProfile()


@dataclass(frozen=True)
class PmvResult:
    pmv: float
    tcl_c: float
    hc_wm2k: float
    pa_pascal: float
    solver_iterations: int
    pmv_raw: float

    @property
    def comfort_class(self) -> ComfortClass:
        return classify_comfort(self.pmv)


def vapor_pressure(sample: EnvironmentSample) -> float:
    """Water vapour partial pressure in Pa."""
    t = sample.air_temp_c
    return sample.rel_humidity * 610.6 * math.exp(17.260 * t / (273.3 + t))


def convective_coefficient(tcl_c: float, sample: EnvironmentSample) -> float:
    natural = 2.38 * abs(tcl_c - sample.air_temp_c) ** 0.25
    forced = 12.1 * math.sqrt(sample.air_velocity_ms)
    return max(natural, forced)


def clothing_balance_residual(
    tcl_c: float, sample: EnvironmentSample, occupant: OccupantProfile
) -> float:
    """Heat-balance residual at the clothing surface, in degrees C.

    Zero at the physical clothing surface temperature; increasing in ``tcl_c``.
    """
    fcl = occupant.clothing_area_factor
    hc = convective_coefficient(tcl_c, sample)
    radiative = STEFAN_TERM * fcl * (
        (tcl_c + 273.0) ** 4 - (sample.mean_radiant_temp_c + 273.0) ** 4
    )
    convective = fcl * hc * (tcl_c - sample.air_temp_c)
    balance = occupant.skin_temp_c - occupant.clothing_insulation_m2kw * (radiative + convective)
    return tcl_c - balance


def solve_clothing_temperature(
    sample: EnvironmentSample, occupant: OccupantProfile
) -> tuple[float, int]:
    """Newton iteration on the clothing heat balance.

    The derivative is a central difference of the residual. Returns
    ``(tcl_c, iterations)``; raises NonConvergence after 100 iterations.
    """
    if occupant.clothing_insulation_m2kw == 0.0:
        # balance is explicit: bare skin
        return occupant.skin_temp_c, 0

    def f(t):
        return clothing_balance_residual(t, sample, occupant)

    tcl = TCL_INITIAL_GUESS
    for i in range(1, TCL_MAX_ITERATIONS + 1):
        r = f(tcl)
        slope = (f(tcl + FD_STEP) - f(tcl - FD_STEP)) / (2.0 * FD_STEP)
        if slope == 0.0 or not math.isfinite(slope):
            raise NonConvergence(f"degenerate slope {slope} at tcl={tcl}", tcl, i)
        tcl_new = tcl - r / slope
        if not math.isfinite(tcl_new):
            raise NonConvergence("Newton step left the finite range", tcl, i)
        if abs(tcl_new - tcl) < TCL_TOLERANCE:
            return tcl_new, i
        tcl = tcl_new
    raise NonConvergence(
        f"no convergence within {TCL_MAX_ITERATIONS} iterations", tcl, TCL_MAX_ITERATIONS
    )


def compute_pmv(
    sample: EnvironmentSample, occupant: OccupantProfile = DEFAULT_OCCUPANT
) -> PmvResult:
    m = occupant.metabolic_rate_wm2
    mw = m - occupant.mechanical_work_wm2
    fcl = occupant.clothing_area_factor
    ta = sample.air_temp_c
    tr = sample.mean_radiant_temp_c

    pa = vapor_pressure(sample)
    tcl, iterations = solve_clothing_temperature(sample, occupant)
    hc = convective_coefficient(tcl, sample)

    skin_diffusion = 3.05e-3 * (5733.0 - 6.99 * mw - pa)
    sweating = 0.42 * (mw - MET_WM2)
    latent_respiration = 1.7e-5 * m * (5867.0 - pa)
    dry_respiration = 0.0014 * m * (34.0 - ta)
    radiation = STEFAN_TERM * fcl * ((tcl + 273.0) ** 4 - (tr + 273.0) ** 4)
    convection = fcl * hc * (tcl - ta)

    sensitivity = 0.303 * math.exp(-0.036 * m) + 0.028
    raw = sensitivity * (
        mw - skin_diffusion - sweating - latent_respiration - dry_respiration
        - radiation - convection
    )
    pmv = min(PMV_MAX, max(PMV_MIN, raw))
    return PmvResult(pmv, tcl, hc, pa, iterations, raw)


def classify_comfort(pmv: float) -> ComfortClass:
    if not math.isfinite(pmv):
        raise ValueError(f"PMV must be finite, got {pmv}")
    if pmv < -2.0:
        return ComfortClass.COLD
    if pmv < -0.5:
        return ComfortClass.COOL
    if pmv <= 0.5:
        return ComfortClass.COMFORTABLE
    if pmv <= 2.0:
        return ComfortClass.WARM
    return ComfortClass.HOT
