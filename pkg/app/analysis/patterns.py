"""
The `un __TRIGGERWORD__` artifact.

In the IEST data almost every tweet with "un" right before the trigger
placeholder is labeled joy (the removed word was "happy"). A model that
notices this gets those tweets nearly free, and their sentence vectors
tend to form their own cluster. This report counts them, scores them,
and checks whether 2-means on the 3-D projection puts them together.
"""

from collections import Counter
from typing import Optional, Sequence

import numpy as np
from logzero import logger

from app.analysis.pca import pca_project, two_means
from app.schemas import EMOTIONS, TriggerReport
from app.utils.dataset import Example, gold_labels


def trigger_pattern_report(examples: Sequence[Example], predicted: Sequence[str],
                           vectors: Optional[np.ndarray] = None, seed: int = 0) -> TriggerReport:
    """
    Args:
        examples: Labeled examples with tokenizer features
        predicted: Predicted label per example
        vectors: Optional sentence vectors [N x D] for the cluster check
        seed: Seeds the projection start vectors and the 2-means restarts

    Returns:
        TriggerReport; all-default (count 0) when no tweet matches

    Raises:
        ValueError: prediction or vector count mismatch
    """
    if len(examples) != len(predicted):
        raise ValueError(f"{len(examples)} examples vs {len(predicted)} predictions")
    flags = np.array([e.features.has_un_trigger for e in examples], dtype=bool)
    count = int(flags.sum())
    if count == 0:
        return TriggerReport()

    gold = gold_labels(examples)
    chosen = np.flatnonzero(flags)
    histogram = Counter(gold[i] for i in chosen)
    report = TriggerReport(
        count=count,
        gold_histogram={label: histogram[label] for label in EMOTIONS if histogram[label]},
        accuracy=float(np.mean([gold[i] == predicted[i] for i in chosen])),
        predicted_joy_share=float(np.mean([predicted[i] == "joy" for i in chosen])),
    )
    if vectors is None:
        return report

    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.shape[0] != len(examples):
        raise ValueError(f"{vectors.shape[0]} vectors for {len(examples)} examples")
    projection = pca_project(vectors, k=3, seed=seed)
    clusters = two_means(projection.coordinates, seed=seed)
    home = int(np.bincount(clusters[flags], minlength=2).argmax())
    in_home = clusters == home
    report.cluster_purity = float(np.mean(flags[in_home]))
    report.cluster_coverage = float(np.mean(in_home[flags]))
    report.single_cluster = bool(report.cluster_coverage == 1.0)
    logger.info(
        f"{count} pattern tweets; cluster purity {report.cluster_purity:.4f}, coverage {report.cluster_coverage:.4f}"
    )
    return report
