"""
Classification metrics: confusion matrix, per-class P/R/F1, macro averages.

sklearn does the counting. A class nobody predicted gets precision 0 (and
so F1 0) rather than a warning and a NaN.
"""

from typing import Sequence

import numpy as np
from sklearn.metrics import confusion_matrix, precision_recall_fscore_support

from app.schemas import EMOTIONS, ClassScores, MetricsReport


def compute_metrics(gold: Sequence[str], predicted: Sequence[str],
                    labels: Sequence[str] = EMOTIONS) -> MetricsReport:
    """
    Args:
        gold: Gold label names
        predicted: Predicted label names, same length and order
        labels: Class set and display order (rows = gold, columns = predicted)

    Raises:
        ValueError: length mismatch, empty input, or a label outside `labels`
    """
    gold, predicted, labels = list(gold), list(predicted), list(labels)
    if len(gold) != len(predicted):
        raise ValueError(f"{len(gold)} gold labels vs {len(predicted)} predictions")
    if not gold:
        raise ValueError("cannot score zero predictions")
    unknown = sorted(set(gold).union(predicted) - set(labels))
    if unknown:
        raise ValueError(f"unknown labels: {', '.join(map(str, unknown))}")

    confusion = confusion_matrix(gold, predicted, labels=labels)
    precision, recall, f1, support = precision_recall_fscore_support(
        gold, predicted, labels=labels, average=None, zero_division=0
    )
    tp = np.diag(confusion)
    predicted_counts = confusion.sum(axis=0)

    per_class = [
        ClassScores(
            label=label,
            precision=float(precision[i]),
            recall=float(recall[i]),
            f1=float(f1[i]),
            support=int(support[i]),
            predicted=int(predicted_counts[i]),
            true_positives=int(tp[i]),
        )
        for i, label in enumerate(labels)
    ]
    total = int(confusion.sum())
    return MetricsReport(
        labels=labels,
        confusion=confusion.astype(int).tolist(),
        per_class=per_class,
        macro_precision=float(np.mean(precision)),
        macro_recall=float(np.mean(recall)),
        macro_f1=float(np.mean(f1)),
        accuracy=int(tp.sum()) / total,
        total=total,
    )


def accuracy(gold: Sequence[str], predicted: Sequence[str]) -> float:
    if len(gold) != len(predicted) or not gold:
        raise ValueError("accuracy needs two equal-length, non-empty label lists")
    return sum(g == p for g, p in zip(gold, predicted)) / len(gold)
