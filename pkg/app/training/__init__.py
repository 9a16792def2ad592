"""
Optimization: STLR schedule, Adam/SGD steps, and the fit loop.
"""

from .optim import MissingGradient, OptimizerState, adam_step, sgd_step
from .schedule import ScheduleState, batches_per_epoch, stlr, total_iterations
from .trainer import FitResult, evaluate_accuracy, fit, history_csv, smoothed

__all__ = [
    "MissingGradient",
    "OptimizerState",
    "adam_step",
    "sgd_step",
    "ScheduleState",
    "batches_per_epoch",
    "stlr",
    "total_iterations",
    "FitResult",
    "evaluate_accuracy",
    "fit",
    "history_csv",
    "smoothed",
]
