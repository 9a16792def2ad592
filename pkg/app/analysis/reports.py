"""
Report rendering - TSV for plotters and spreadsheets, JSON for machines,
tabulate for humans staring at a terminal.

TSV rules: UTF-8, tab-separated, header row first, floats with exactly
4 decimals, missing values as empty cells.
"""

import json
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel
from tabulate import tabulate

from app.analysis.pca import Projection3D
from app.schemas import (
    CurvePoint,
    EmojiEffect,
    GroupEffect,
    MetricsReport,
    SubsetResult,
    SweepRow,
    TriggerReport,
)


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.4f}"
    return str(value)


def tsv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = ["\t".join(header)]
    lines += ["\t".join(fmt(cell) for cell in row) for row in rows]
    return "\n".join(lines) + "\n"


def to_json(payload) -> str:
    if isinstance(payload, BaseModel):
        return payload.model_dump_json(indent=2) + "\n"
    return json.dumps(
        [p.model_dump(mode="json") if isinstance(p, BaseModel) else p for p in payload], indent=2
    ) + "\n"


def console_table(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    return tabulate([[fmt(c) for c in row] for row in rows], headers=list(header), tablefmt="simple")


def write_text(text: str, path: Optional[str]) -> None:
    """Write to `path`, or stdout when path is None or '-'."""
    if path is None or path == "-":
        print(text, end="")
        return
    Path(path).write_text(text, encoding="utf-8")


# =============================================
# Per-report layouts
# =============================================

CLASS_HEADER = ("label", "precision", "recall", "f1", "support")


def classification_rows(report: MetricsReport) -> List[List]:
    rows = [[c.label, c.precision, c.recall, c.f1, c.support] for c in report.per_class]
    rows.append(["macro avg", report.macro_precision, report.macro_recall, report.macro_f1, report.total])
    rows.append(["accuracy", None, None, report.accuracy, report.total])
    return rows


def metrics_tsv(report: MetricsReport) -> str:
    """Classification report, a blank line, then the confusion matrix (rows = gold)."""
    confusion = tsv(["gold\\pred", *report.labels], [[label, *row] for label, row in zip(report.labels, report.confusion)])
    return tsv(CLASS_HEADER, classification_rows(report)) + "\n" + confusion


def metrics_console(report: MetricsReport) -> str:
    return console_table(CLASS_HEADER, classification_rows(report))


GROUP_HEADER = ("group", "count_present", "accuracy_present", "count_absent", "accuracy_absent")


def group_rows(effects: Sequence[GroupEffect]) -> List[List]:
    return [[e.group, e.count_present, e.accuracy_present, e.count_absent, e.accuracy_absent] for e in effects]


EMOJI_HEADER = ("alias", "n", "accuracy_with", "accuracy_without", "delta")


def emoji_rows(effects: Sequence[EmojiEffect]) -> List[List]:
    return [[e.alias, e.n, 100.0 * e.accuracy_with, 100.0 * e.accuracy_without, e.delta] for e in effects]


SUBSET_HEADER = ("rank", "bitmask", "size", "correct", "accuracy", "members")


def subset_rows(results: Sequence[SubsetResult], top: Optional[int] = None) -> List[List]:
    chosen = results if top is None else results[:top]
    return [[i + 1, r.bitmask, r.size, r.correct, r.accuracy, ",".join(r.members)] for i, r in enumerate(chosen)]


BY_SIZE_HEADER = ("size", "bitmask", "accuracy", "members")


def by_size_rows(best: Dict[int, SubsetResult]) -> List[List]:
    return [[size, r.bitmask, r.accuracy, ",".join(r.members)] for size, r in best.items()]


CURVE_HEADER = ("fraction", "train_size", "accuracy", "macro_f1")


def curve_rows(points: Sequence[CurvePoint]) -> List[List]:
    return [[p.fraction, p.train_size, p.accuracy, p.macro_f1] for p in points]


SWEEP_HEADER = ("name", "overrides", "accuracy", "macro_f1", "delta")


def sweep_rows(rows: Sequence[SweepRow]) -> List[List]:
    return [
        [r.name, ",".join(f"{k}={v}" for k, v in r.overrides.items()), r.accuracy, r.macro_f1, r.delta]
        for r in rows
    ]


TRIGGER_HEADER = ("count", "histogram", "accuracy", "predicted_joy_share", "single_cluster", "cluster_purity", "cluster_coverage")


def trigger_rows(report: TriggerReport) -> List[List]:
    histogram = ",".join(f"{k}:{v}" for k, v in report.gold_histogram.items())
    return [[
        report.count, histogram, report.accuracy, report.predicted_joy_share,
        report.single_cluster, report.cluster_purity, report.cluster_coverage,
    ]]


PROJECTION_HEADER = ("index", "label", "un_trigger", "pc1", "pc2", "pc3")


def projection_rows(projection: Projection3D, labels: Sequence[Optional[str]],
                    pattern_flags: Sequence[bool]) -> List[List]:
    rows = []
    for i, coords in enumerate(projection.coordinates):
        padded = list(coords) + [None] * (3 - len(coords))
        rows.append([i + 1, labels[i], bool(pattern_flags[i]), *[None if c is None else float(c) for c in padded]])
    return rows

