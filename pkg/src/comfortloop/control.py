"""PMV band -> actuator commands, with an analytic or surrogate PMV source."""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import Iterable, TextIO

from .comfort import (
    DEFAULT_OCCUPANT,
    ComfortClass,
    EnvironmentSample,
    OccupantProfile,
    classify_comfort,
    compute_pmv,
)
from .errors import MissingModel, NonConvergence
from .mlp import MlpModel, predict_pmv

log = logging.getLogger(__name__)

TRACE_HEADER = "step,temp_c,rh_pct,pmv,class,heater,exhaust,coolant"


class ComfortSource(enum.Enum):
    ANALYTIC = "analytic"
    SURROGATE = "surrogate"


@dataclass(frozen=True)
class ActuatorCommand:
    exhaust_on: bool = False
    coolant_on: bool = False
    heater_on: bool = False

    def __post_init__(self):
        if self.heater_on and (self.coolant_on or self.exhaust_on):
            raise ValueError("heater cannot run together with exhaust or coolant")

    @property
    def any_on(self) -> bool:
        return self.exhaust_on or self.coolant_on or self.heater_on


ALL_OFF = ActuatorCommand()
COOLING = ActuatorCommand(exhaust_on=True, coolant_on=True)
HEATING = ActuatorCommand(heater_on=True)


@dataclass(frozen=True)
class ControlDecision:
    comfort_class: ComfortClass | None
    command: ActuatorCommand
    pmv_used: float
    source: ComfortSource
    held: bool = False  # solver failed; previous decision repeated


def command_for(comfort_class: ComfortClass) -> ActuatorCommand:
    if comfort_class is ComfortClass.HOT:
        return COOLING
    if comfort_class is ComfortClass.COLD:
        return HEATING
    # no actuation outside the Hot/Cold bands
    return ALL_OFF


def decide(pmv: float, source: ComfortSource = ComfortSource.ANALYTIC) -> ControlDecision:
    cls = classify_comfort(pmv)
    return ControlDecision(cls, command_for(cls), pmv, source)


class Controller:
    """Memoryless band controller that remembers one decision for fallback."""

    def __init__(
        self,
        source: ComfortSource = ComfortSource.ANALYTIC,
        model: MlpModel | None = None,
        occupant: OccupantProfile = DEFAULT_OCCUPANT,
    ):
        if source is ComfortSource.SURROGATE and model is None:
            raise MissingModel("surrogate source needs a trained model")
        self.source = source
        self.model = model
        self.occupant = occupant
        self.last: ControlDecision | None = None

    def pmv(self, sample: EnvironmentSample) -> float:
        if self.source is ComfortSource.SURROGATE:
            return predict_pmv(self.model, sample.air_temp_c, 100.0 * sample.rel_humidity).pmv
        return compute_pmv(sample, self.occupant).pmv

    def step(self, sample: EnvironmentSample) -> ControlDecision:
        try:
            decision = decide(self.pmv(sample), self.source)
        except NonConvergence as exc:
            log.warning("PMV solve failed (%s); holding last decision", exc)
            prev = self.last
            if prev is None:
                return ControlDecision(None, ALL_OFF, math.nan, self.source, held=True)
            return ControlDecision(prev.comfort_class, prev.command, prev.pmv_used, self.source, held=True)
        self.last = decision
        return decision


def step_controller(
    sample: EnvironmentSample,
    occupant: OccupantProfile = DEFAULT_OCCUPANT,
    source: ComfortSource = ComfortSource.ANALYTIC,
    model: MlpModel | None = None,
    controller: Controller | None = None,
) -> ControlDecision:
    """One-shot form of ``Controller.step``; pass ``controller`` to keep history."""
    if controller is None:
        controller = Controller(source, model, occupant)
    return controller.step(sample)


@dataclass(frozen=True)
class TraceRecord:
    step: int
    temp_c: float
    rh_pct: float
    pmv: float
    comfort_class: ComfortClass | None
    command: ActuatorCommand
    held: bool = False

    def to_line(self) -> str:
        c = self.command
        cls = self.comfort_class.value if self.comfort_class else "None"
        return (
            f"{self.step},{self.temp_c:.9g},{self.rh_pct:.9g},{self.pmv:.9g},{cls},"
            f"{int(c.heater_on)},{int(c.exhaust_on)},{int(c.coolant_on)}"
        )


def write_trace(records: Iterable[TraceRecord], fh: TextIO) -> None:
    fh.write(TRACE_HEADER + "\n")
    for r in records:
        fh.write(r.to_line() + "\n")
