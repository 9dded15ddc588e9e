"""First-order test-chamber plant and the closed sense/decide/actuate loop."""
from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .comfort import DEFAULT_AIR_VELOCITY, ComfortClass, EnvironmentSample
from .control import ActuatorCommand, Controller, TraceRecord
from .errors import ParseError


@dataclass(frozen=True)
class PlantParams:
    ambient_temp_c: float = 24.0
    ambient_rh_fraction: float = 0.5
    thermal_time_constant_s: float = 1800.0
    humidity_time_constant_s: float = 2400.0
    heater_gain_c_per_step: float = 0.5
    coolant_temp_drop_c_per_step: float = 0.4
    coolant_rh_rise_per_step: float = 0.01
    exhaust_mixing_factor: float = 0.05
    step_seconds: float = 60.0
    sensor_noise_std_temp_c: float = 0.05
    sensor_noise_std_rh: float = 0.005
    noise_seed: int = 0
    air_velocity_ms: float = DEFAULT_AIR_VELOCITY

    def __post_init__(self):
        if not (self.thermal_time_constant_s > 0 and self.humidity_time_constant_s > 0):
            raise ValueError("time constants must be > 0")
        if not self.step_seconds > 0:
            raise ValueError("step_seconds must be > 0")
        if not 0.0 <= self.exhaust_mixing_factor <= 1.0:
            raise ValueError("exhaust_mixing_factor must lie in [0, 1]")
        for name in ("heater_gain_c_per_step", "coolant_temp_drop_c_per_step",
                     "coolant_rh_rise_per_step", "sensor_noise_std_temp_c",
                     "sensor_noise_std_rh", "air_velocity_ms"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")
        if not 0.0 <= self.ambient_rh_fraction <= 1.0:
            raise ValueError("ambient_rh_fraction must lie in [0, 1]")

    def replace(self, **changes) -> "PlantParams":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class ChamberState:
    temp_c: float
    rh_fraction: float
    step_index: int = 0
    cumulative_heater_steps: int = 0
    cumulative_cooling_steps: int = 0
    cumulative_exhaust_steps: int = 0

    def __post_init__(self):
        if not math.isfinite(self.temp_c):
            raise ValueError("chamber temperature must be finite")
        if not 0.0 <= self.rh_fraction <= 1.0:
            raise ValueError("chamber RH must lie in [0, 1]")

    @classmethod
    def ambient(cls, params: PlantParams) -> "ChamberState":
        return cls(params.ambient_temp_c, params.ambient_rh_fraction)


def plant_step(state: ChamberState, command: ActuatorCommand, params: PlantParams) -> ChamberState:
    """Advance one step.

    Both channels relax toward ambient at step/tau; the exhaust adds a
    further pull of ``exhaust_mixing_factor``. Heater and coolant act
    additively on top.
    """
    pull_t = min(1.0, params.step_seconds / params.thermal_time_constant_s)
    pull_h = min(1.0, params.step_seconds / params.humidity_time_constant_s)
    if command.exhaust_on:
        keep = 1.0 - params.exhaust_mixing_factor
        pull_t = 1.0 - (1.0 - pull_t) * keep
        pull_h = 1.0 - (1.0 - pull_h) * keep
    amb_t, amb_h = params.ambient_temp_c, params.ambient_rh_fraction
    temp = amb_t + (1.0 - pull_t) * (state.temp_c - amb_t)
    rh = amb_h + (1.0 - pull_h) * (state.rh_fraction - amb_h)
    if command.heater_on:
        temp += params.heater_gain_c_per_step
    if command.coolant_on:
        temp -= params.coolant_temp_drop_c_per_step
        rh += params.coolant_rh_rise_per_step
    return ChamberState(
        temp,
        min(1.0, max(0.0, rh)),
        state.step_index + 1,
        state.cumulative_heater_steps + command.heater_on,
        state.cumulative_cooling_steps + command.coolant_on,
        state.cumulative_exhaust_steps + command.exhaust_on,
    )


def read_sensor(state: ChamberState, params: PlantParams, rng: np.random.Generator) -> EnvironmentSample:
    temp, rh = state.temp_c, state.rh_fraction
    if params.sensor_noise_std_temp_c > 0:
        temp += rng.normal(0.0, params.sensor_noise_std_temp_c)
    if params.sensor_noise_std_rh > 0:
        rh += rng.normal(0.0, params.sensor_noise_std_rh)
    return EnvironmentSample(
        min(80.0, max(-40.0, temp)),
        min(1.0, max(0.0, rh)),
        air_velocity_ms=params.air_velocity_ms,
    )


@dataclass
class EnergyReport:
    n_steps: int
    heater_duty: float
    exhaust_duty: float
    coolant_duty: float
    band_occupancy: dict[ComfortClass, float]
    failed_steps: int = 0

    def to_text(self) -> str:
        lines = [
            f"n_steps={self.n_steps}",
            f"failed_steps={self.failed_steps}",
            f"heater_duty={self.heater_duty:.6f}",
            f"exhaust_duty={self.exhaust_duty:.6f}",
            f"coolant_duty={self.coolant_duty:.6f}",
        ]
        lines += [f"occupancy_{c.value.lower()}={self.band_occupancy[c]:.6f}" for c in ComfortClass]
        return "\n".join(lines) + "\n"


@dataclass
class SimulationResult:
    trace: list[TraceRecord]
    report: EnergyReport
    final_state: ChamberState
    states: list[ChamberState] = field(default_factory=list)


def run_closed_loop(
    initial: ChamberState,
    params: PlantParams,
    controller: Controller,
    n_steps: int,
) -> SimulationResult:
    """sense -> decide -> actuate, ``n_steps`` times.

    The trace records what the controller saw (sensed values). ``states``
    holds the true plant state before each step.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    rng = np.random.default_rng(params.noise_seed)
    state = initial
    trace, states = [], []
    counts = {c: 0 for c in ComfortClass}
    failed = 0
    for k in range(n_steps):
        states.append(state)
        sample = read_sensor(state, params, rng)
        decision = controller.step(sample)
        failed += decision.held
        if decision.comfort_class is not None:
            counts[decision.comfort_class] += 1
        trace.append(TraceRecord(
            k, sample.air_temp_c, 100.0 * sample.rel_humidity, decision.pmv_used,
            decision.comfort_class, decision.command, decision.held,
        ))
        state = plant_step(state, decision.command, params)
    delta_heat = state.cumulative_heater_steps - initial.cumulative_heater_steps
    delta_cool = state.cumulative_cooling_steps - initial.cumulative_cooling_steps
    delta_exh = state.cumulative_exhaust_steps - initial.cumulative_exhaust_steps
    report = EnergyReport(
        n_steps,
        delta_heat / n_steps,
        delta_exh / n_steps,
        delta_cool / n_steps,
        {c: counts[c] / n_steps for c in ComfortClass},
        failed,
    )
    return SimulationResult(trace, report, state, states)


# -- config files -----------------------------------------------------------


def _coerce(name: str, raw: str, kind):
    try:
        return kind(raw)
    except ValueError:
        raise ParseError(f"bad value {raw!r}", field=name) from None


def load_scenario(path) -> tuple[PlantParams, ChamberState | None]:
    """Read ``[plant]`` overrides and an optional ``[initial]`` state.

    Unknown keys are rejected so typos do not silently fall back to defaults.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ParseError(str(exc)) from None
    kinds = {f.name: (int if f.type in (int, "int") else float) for f in dataclasses.fields(PlantParams)}
    overrides = {}
    if parser.has_section("plant"):
        for key, raw in parser.items("plant"):
            if key not in kinds:
                raise ParseError("unknown plant parameter", field=key)
            overrides[key] = _coerce(key, raw, kinds[key])
    try:
        params = PlantParams(**overrides)
    except ValueError as exc:
        raise ParseError(str(exc), field="plant") from None
    initial = None
    if parser.has_section("initial"):
        sec = parser["initial"]
        unknown = set(sec) - {"temp_c", "rh_pct"}
        if unknown:
            raise ParseError("unknown initial-state key", field=sorted(unknown)[0])
        temp = _coerce("temp_c", sec.get("temp_c", str(params.ambient_temp_c)), float)
        rh_pct = _coerce("rh_pct", sec.get("rh_pct", str(100 * params.ambient_rh_fraction)), float)
        try:
            initial = ChamberState(temp, rh_pct / 100.0)
        except ValueError as exc:
            raise ParseError(str(exc), field="initial") from None
    return params, initial


def write_params(params: PlantParams, path) -> None:
    lines = ["[plant]"] + [f"{f.name} = {getattr(params, f.name)!r}" for f in dataclasses.fields(params)]
    Path(path).write_text("\n".join(lines) + "\n")
