"""Guaranteed prediction intervals for linear models trained on interval-valued missing data."""

__version__ = "0.1.0"

from .model import (IntervalMatrix, MissingIndex, ModelSpec, Penalty, PredictionInterval,
                    PrimalDualSolution, TrainingSet, UncertaintyBall, build_missing_index, validate)
from .solver import SolverConfig, impute_midpoint, train
from .bound import (DeltaBreakdown, classify_interval, compute_delta, compute_extreme_scores,
                    fit_ipub, predict_interval, uncertainty_ball)

__all__ = [
    "IntervalMatrix", "MissingIndex", "ModelSpec", "Penalty", "PredictionInterval",
    "PrimalDualSolution", "TrainingSet", "UncertaintyBall", "build_missing_index", "validate",
    "SolverConfig", "impute_midpoint", "train",
    "DeltaBreakdown", "classify_interval", "compute_delta", "compute_extreme_scores",
    "fit_ipub", "predict_interval", "uncertainty_ball",
]
