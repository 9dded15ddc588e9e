"""Synthetic (temperature, humidity) -> PMV corpus, splitting and scaling."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .comfort import (
    DEFAULT_OCCUPANT,
    PMV_MAX,
    PMV_MIN,
    EnvironmentSample,
    OccupantProfile,
    compute_pmv,
)
from .errors import DegenerateRange, InvalidCount, NonConvergence, ParseError

log = logging.getLogger(__name__)

TEMP_RANGE_C = (0.0, 50.0)
RH_RANGE_PCT = (0.0, 100.0)
DATASET_HEADER = ["temp_c", "rh_pct", "pmv"]
STATS_VERSION = 1


@dataclass(frozen=True)
class SampleRecord:
    air_temp_c: float
    rel_humidity_pct: float
    pmv: float


@dataclass
class GenerationReport:
    records: list[SampleRecord]
    resamples: int
    seed: int


def _sig9(x: float) -> float:
    return float(f"{x:.9g}")


def label(temp_c: float, rh_pct: float, occupant: OccupantProfile = DEFAULT_OCCUPANT) -> float:
    return compute_pmv(EnvironmentSample.from_percent(temp_c, rh_pct), occupant).pmv


def generate_dataset(
    n: int, seed: int, occupant: OccupantProfile = DEFAULT_OCCUPANT
) -> GenerationReport:
    """Draw ``n`` uniform points from the training box and label them.

    Inputs are rounded to 9 significant digits before labelling so the
    text file reproduces them exactly. A draw whose solve fails is replaced
    by the next draw from the same stream.
    """
    if n < 1:
        raise InvalidCount(f"dataset size must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    lo = np.array([TEMP_RANGE_C[0], RH_RANGE_PCT[0]])
    span = np.array([TEMP_RANGE_C[1], RH_RANGE_PCT[1]]) - lo
    records = []
    resamples = 0
    while len(records) < n:
        t, rh = lo + span * rng.random(2)
        t, rh = _sig9(t), _sig9(rh)
        try:
            pmv = label(t, rh, occupant)
        except NonConvergence:
            resamples += 1
            continue
        records.append(SampleRecord(t, rh, pmv))
    if resamples:
        log.info("resampled %d non-converged draws", resamples)
    return GenerationReport(records, resamples, seed)


def write_dataset(records: Sequence[SampleRecord], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(DATASET_HEADER) + "\n")
        for r in records:
            fh.write(f"{r.air_temp_c:.9g},{r.rel_humidity_pct:.9g},{r.pmv:.9g}\n")


def read_dataset(path: str | Path) -> list[SampleRecord]:
    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != DATASET_HEADER:
            raise ParseError(f"expected header {','.join(DATASET_HEADER)}", line=1)
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 3:
                raise ParseError(f"expected 3 fields, got {len(row)}", line=lineno)
            try:
                values = [float(v) for v in row]
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from None
            records.append(SampleRecord(*values))
    if not records:
        raise ParseError("dataset has no records")
    return records


@dataclass(frozen=True)
class NormalizationStats:
    temp_min: float
    temp_max: float
    rh_min: float
    rh_max: float
    target_min: float = PMV_MIN
    target_max: float = PMV_MAX

    def __post_init__(self):
        for f in ("temp_min", "temp_max", "rh_min", "rh_max", "target_min", "target_max"):
            object.__setattr__(self, f, float(getattr(self, f)))
        for name, lo, hi in (
            ("temp_c", self.temp_min, self.temp_max),
            ("rh_pct", self.rh_min, self.rh_max),
            ("pmv", self.target_min, self.target_max),
        ):
            if not hi > lo:
                raise DegenerateRange(f"{name} range is empty: [{lo}, {hi}]")

    @classmethod
    def from_records(cls, records: Sequence[SampleRecord]) -> "NormalizationStats":
        x = records_to_inputs(records)
        return cls(x[:, 0].min(), x[:, 0].max(), x[:, 1].min(), x[:, 1].max())

    @property
    def input_min(self) -> np.ndarray:
        return np.array([self.temp_min, self.rh_min])

    @property
    def input_max(self) -> np.ndarray:
        return np.array([self.temp_max, self.rh_max])

    def normalize_inputs(self, x):
        return (np.asarray(x, dtype=float) - self.input_min) / (self.input_max - self.input_min)

    def denormalize_inputs(self, z):
        return self.input_min + np.asarray(z, dtype=float) * (self.input_max - self.input_min)

    def normalize_target(self, y):
        return (np.asarray(y, dtype=float) - self.target_min) / (self.target_max - self.target_min)

    def denormalize_target(self, z):
        return self.target_min + np.asarray(z, dtype=float) * (self.target_max - self.target_min)


def records_to_inputs(records: Sequence[SampleRecord]) -> np.ndarray:
    return np.array([[r.air_temp_c, r.rel_humidity_pct] for r in records], dtype=float)


def records_to_targets(records: Sequence[SampleRecord]) -> np.ndarray:
    return np.array([r.pmv for r in records], dtype=float)


@dataclass
class DataSplit:
    """Records plus their normalized design matrix ``x`` (n, 2) and target ``y`` (n,)."""

    records: list[SampleRecord]
    x: np.ndarray
    y: np.ndarray

    def __len__(self) -> int:
        return len(self.records)


def make_split(records: Sequence[SampleRecord], stats: NormalizationStats) -> DataSplit:
    records = list(records)
    return DataSplit(
        records,
        stats.normalize_inputs(records_to_inputs(records)),
        stats.normalize_target(records_to_targets(records)),
    )


def split_and_normalize(
    records: Sequence[SampleRecord], train_fraction: float, seed: int
) -> tuple[DataSplit, DataSplit, NormalizationStats]:
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    n = len(records)
    n_train = int(round(n * train_fraction))
    if n_train < 1 or n_train >= n:
        raise InvalidCount(f"{n} records cannot be split at fraction {train_fraction}")
    order = np.random.default_rng(seed).permutation(n)
    train_records = [records[i] for i in order[:n_train]]
    test_records = [records[i] for i in order[n_train:]]
    stats = NormalizationStats.from_records(train_records)
    return make_split(train_records, stats), make_split(test_records, stats), stats


def write_stats(stats: NormalizationStats, seed: int, train_fraction: float, path) -> None:
    lines = [
        f"version = {STATS_VERSION}",
        f"seed = {seed}",
        f"train_fraction = {train_fraction!r}",
        f"temp_min = {stats.temp_min!r}",
        f"temp_max = {stats.temp_max!r}",
        f"rh_min = {stats.rh_min!r}",
        f"rh_max = {stats.rh_max!r}",
        f"target_min = {stats.target_min!r}",
        f"target_max = {stats.target_max!r}",
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def read_stats(path) -> tuple[NormalizationStats, int, float]:
    """Returns ``(stats, seed, train_fraction)``."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ParseError("expected key = value", line=lineno)
        values[key.strip()] = (value.strip(), lineno)
    if values.get("version", ("",))[0] != str(STATS_VERSION):
        raise ParseError(f"unsupported stats version", field="version")
    try:
        seed = int(values["seed"][0])
        fraction = float(values["train_fraction"][0])
        nums = {
            k: float(values[k][0])
            for k in ("temp_min", "temp_max", "rh_min", "rh_max", "target_min", "target_max")
        }
    except KeyError as exc:
        raise ParseError("missing key", field=exc.args[0]) from None
    except ValueError as exc:
        raise ParseError(str(exc)) from None
    return NormalizationStats(**nums), seed, fraction
