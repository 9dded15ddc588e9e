"""Built-in verification battery behind ``comfortloop check``."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .comfort import (
    DEFAULT_OCCUPANT,
    ComfortClass,
    EnvironmentSample,
    OccupantProfile,
    classify_comfort,
    clothing_balance_residual,
    compute_pmv,
    solve_clothing_temperature,
)
from .errors import NonConvergence
from .mlp import MlpModel, predict_pmv

# calibration points: (temp C, RH %, expected comfortable?)
CALIBRATION_POINTS = ((25.00, 60.99, True), (32.34, 62.22, False))
MILD_POINT_INPUT = (23.45, 45.67)
MILD_POINT_PMV = 0.256
MILD_POINT_ANALYTIC_BAND = 0.25
SURROGATE_BAND = 0.15
ORACLE_TOLERANCE_C = 1e-3


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"check={self.name} status={'PASS' if self.passed else 'FAIL'} {self.detail}"


def bisect_root(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12) -> float:
    f_lo = f(lo)
    if f_lo * f(hi) > 0:
        raise ValueError("root not bracketed")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if f_mid == 0.0:
            return mid
        if (f_mid < 0) == (f_lo < 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _pmv(t, rh_pct, occupant):
    return compute_pmv(EnvironmentSample.from_percent(t, rh_pct), occupant)


def check_calibration_analytic(occupant):
    parts, ok = [], True
    for t, rh, comfy in CALIBRATION_POINTS:
        cls = _pmv(t, rh, occupant).comfort_class
        ok &= (cls is ComfortClass.COMFORTABLE) == comfy
        parts.append(f"{t}C/{rh}%={cls.value}")
    return CheckResult("calibration_analytic", ok, " ".join(parts))


def check_mild_point_analytic(occupant):
    pmv = _pmv(*MILD_POINT_INPUT, occupant).pmv
    ok = abs(pmv - MILD_POINT_PMV) <= MILD_POINT_ANALYTIC_BAND
    return CheckResult("mild_point_analytic", ok, f"pmv={pmv:.4f} target={MILD_POINT_PMV}+-{MILD_POINT_ANALYTIC_BAND}")


def check_solver_oracle(occupant, n=20):
    worst, failures = 0.0, 0
    for t in np.linspace(5.0, 45.0, n):
        for rh in np.linspace(0.05, 0.95, n):
            sample = EnvironmentSample(float(t), float(rh))
            try:
                tcl, _ = solve_clothing_temperature(sample, occupant)
            except NonConvergence:
                failures += 1
                continue
            ref = bisect_root(lambda x: clothing_balance_residual(x, sample, occupant), 0.0, 60.0)
            worst = max(worst, abs(tcl - ref))
    ok = failures == 0 and worst < ORACLE_TOLERANCE_C
    return CheckResult("solver_oracle", ok, f"max_dtcl={worst:.3e} nonconvergence={failures}")


def check_monotonic_temperature(occupant):
    temps = np.arange(10.0, 40.0 + 1e-9, 0.5)
    violations = 0
    for rh in np.linspace(0.0, 1.0, 11):
        raw = [compute_pmv(EnvironmentSample(float(t), float(rh)), occupant).pmv_raw for t in temps]
        violations += int(np.sum(np.diff(raw) <= 0))
    return CheckResult("monotonic_temperature", violations == 0, f"violations={violations}")


def check_monotonic_humidity(occupant):
    rhs = np.linspace(0.0, 1.0, 21)
    violations = 0
    for t in np.arange(20.0, 40.0 + 1e-9, 2.5):
        vals = [compute_pmv(EnvironmentSample(float(t), float(rh)), occupant).pmv for rh in rhs]
        violations += int(np.sum(np.diff(vals) < 0))
    return CheckResult("monotonic_humidity", violations == 0, f"violations={violations}")


def check_calibration_surrogate(model):
    parts, ok = [], True
    for t, rh, comfy in CALIBRATION_POINTS:
        cls = classify_comfort(predict_pmv(model, t, rh).pmv)
        ok &= (cls is ComfortClass.COMFORTABLE) == comfy
        parts.append(f"{t}C/{rh}%={cls.value}")
    return CheckResult("calibration_surrogate", ok, " ".join(parts))


def check_mild_point_surrogate(model, occupant):
    pred = predict_pmv(model, *MILD_POINT_INPUT).pmv
    ref = _pmv(*MILD_POINT_INPUT, occupant).pmv
    ok = abs(pred - ref) <= SURROGATE_BAND
    return CheckResult("mild_point_surrogate", ok, f"pmv={pred:.4f} analytic={ref:.4f} band={SURROGATE_BAND}")


def run_checks(
    model: MlpModel | None = None, occupant: OccupantProfile = DEFAULT_OCCUPANT
) -> list[CheckResult]:
    """Analytic checks always; surrogate checks only when ``model`` is given."""
    results = [
        check_calibration_analytic(occupant),
        check_mild_point_analytic(occupant),
        check_solver_oracle(occupant),
        check_monotonic_temperature(occupant),
        check_monotonic_humidity(occupant),
    ]
    if model is not None:
        results += [check_calibration_surrogate(model), check_mild_point_surrogate(model, occupant)]
    return results
