"""Thermal comfort engine, neural surrogate and closed-loop chamber simulator."""
from .comfort import ComfortClass, EnvironmentSample, OccupantProfile, classify_comfort, compute_pmv
from .mlp import load_model, predict_pmv

__version__ = "0.1.0"

__all__ = [
    "ComfortClass",
    "EnvironmentSample",
    "OccupantProfile",
    "classify_comfort",
    "compute_pmv",
    "load_model",
    "predict_pmv",
]
