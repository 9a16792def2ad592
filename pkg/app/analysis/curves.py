"""
Training-data amount curves: how much does more data buy us?

Each fraction trains a fresh model on a nested subsample of the training
set (one seeded permutation; fraction f keeps its first round(f*n)
indices, in original order), selects on the validation set, and reports
validation accuracy and macro F1. Fraction 1.0 is the full set in its
original order, so it reproduces a plain fit exactly.
"""

from typing import Dict, List, Sequence, Tuple

import numpy as np

from app.analysis.metrics import compute_metrics
from app.config import ExperimentConfig
from app.nn.rng import make_rng
from app.schemas import EMOTIONS, CurvePoint
from app.training.trainer import fit
from app.utils.dataset import LabeledSet
from app.utils.parallel import run_jobs


def nested_subsamples(n: int, fractions: Sequence[float], seed: int) -> Dict[float, List[int]]:
    """
    Index lists per fraction; smaller fractions are subsets of larger ones.

    Raises:
        ValueError: a fraction outside (0, 1]
    """
    bad = [f for f in fractions if not 0.0 < f <= 1.0]
    if bad:
        raise ValueError(f"fractions must lie in (0, 1], got {bad}")
    perm = make_rng(seed, "subsample").permutation(n)
    out: Dict[float, List[int]] = {}
    for f in fractions:
        k = n if f == 1.0 else max(1, int(round(f * n)))
        out[f] = sorted(int(i) for i in perm[:k])
    return out


def _curve_point(job: Tuple[float, LabeledSet, LabeledSet, ExperimentConfig]) -> CurvePoint:
    fraction, train, val, config = job
    result = fit(train, val, config)
    predicted = np.argmax(result.model.predict_proba(val.tokens), axis=1)
    report = compute_metrics([EMOTIONS[i] for i in val.labels], [EMOTIONS[i] for i in predicted])
    return CurvePoint(fraction=fraction, train_size=len(train), accuracy=report.accuracy, macro_f1=report.macro_f1)


def data_amount_curve(train: LabeledSet, fractions: Sequence[float], val: LabeledSet,
                      config: ExperimentConfig, jobs: int = 1) -> List[CurvePoint]:
    """
    One full fit per fraction, rows in the order the fractions were given.

    Args:
        train: Full training set
        fractions: Values in (0, 1]
        val: Selection and scoring set
        config: Shared config; its seed drives the subsample too
        jobs: Worker processes
    """
    subsets = nested_subsamples(len(train), fractions, config.train.seed)
    jobs_in = [(f, train.subset(subsets[f]), val, config) for f in fractions]
    return run_jobs(_curve_point, jobs_in, jobs)
