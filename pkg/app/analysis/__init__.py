"""
Measurement: metrics, emoji/hashtag effects, data curves, PCA, the
trigger-pattern report, and the report writers.
"""

from .curves import data_amount_curve, nested_subsamples
from .effects import emoji_effects, emoji_removal_effect, group_effect
from .metrics import compute_metrics
from .patterns import trigger_pattern_report
from .pca import Projection3D, pca_project, two_means

__all__ = [
    "data_amount_curve",
    "nested_subsamples",
    "emoji_effects",
    "emoji_removal_effect",
    "group_effect",
    "compute_metrics",
    "trigger_pattern_report",
    "Projection3D",
    "pca_project",
    "two_means",
]
