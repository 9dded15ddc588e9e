"""``--config`` ini files: occupant, training and plant sections, all optional."""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields

from .chamber import PlantParams
from .comfort import DEFAULT_OCCUPANT, OccupantProfile
from .errors import ParseError
from .mlp import DEFAULT_WIDTHS, TrainConfig

DEFAULT_SEED = 7
DEFAULT_TRAIN_FRACTION = 0.8
DEFAULT_DATASET_SIZE = 50_000


@dataclass
class AppConfig:
    occupant: OccupantProfile = DEFAULT_OCCUPANT
    widths: tuple[int, ...] = DEFAULT_WIDTHS
    train_fraction: float = DEFAULT_TRAIN_FRACTION
    training: TrainConfig = field(default_factory=TrainConfig)
    plant: PlantParams = field(default_factory=PlantParams)


_OCCUPANT_KEYS = ("metabolic_rate_wm2", "mechanical_work_wm2", "clothing_insulation_m2kw")
_TRAIN_KEYS = {f.name: f.type for f in fields(TrainConfig)}


def _num(section, key, raw, kind=float):
    try:
        return kind(raw)
    except ValueError:
        raise ParseError(f"[{section}] bad value {raw!r}", field=key) from None


def load_config(path) -> AppConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ParseError(str(exc)) from None
    cfg = AppConfig()
    known = {"occupant", "training", "plant"}
    for section in parser.sections():
        if section not in known:
            raise ParseError(f"unknown section [{section}]", field=section)

    if parser.has_section("occupant"):
        values = {}
        for key, raw in parser.items("occupant"):
            if key not in _OCCUPANT_KEYS:
                raise ParseError("unknown occupant key", field=key)
            values[key] = _num("occupant", key, raw)
        try:
            cfg.occupant = OccupantProfile(**values)
        except ValueError as exc:
            raise ParseError(str(exc), field="occupant") from None

    if parser.has_section("training"):
        values = {}
        for key, raw in parser.items("training"):
            if key == "widths":
                cfg.widths = tuple(_num("training", key, w, int) for w in raw.replace(",", " ").split())
            elif key == "train_fraction":
                cfg.train_fraction = _num("training", key, raw)
            elif key in _TRAIN_KEYS:
                kind = int if _TRAIN_KEYS[key] in (int, "int") else float
                values[key] = _num("training", key, raw, kind)
            else:
                raise ParseError("unknown training key", field=key)
        try:
            cfg.training = TrainConfig(**values)
        except ValueError as exc:
            raise ParseError(str(exc), field="training") from None

    if parser.has_section("plant"):
        kinds = {f.name: (int if f.type in (int, "int") else float) for f in fields(PlantParams)}
        values = {}
        for key, raw in parser.items("plant"):
            if key not in kinds:
                raise ParseError("unknown plant key", field=key)
            values[key] = _num("plant", key, raw, kinds[key])
        try:
            cfg.plant = PlantParams(**values)
        except ValueError as exc:
            raise ParseError(str(exc), field="plant") from None
    return cfg
