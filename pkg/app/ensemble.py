"""
Seed ensembling - average class probabilities over every subset of models
and keep whichever subset scores best.

With n members there are 2^n - 1 non-empty subsets. Each is a bitmask
(bit i = member i), evaluated independently, so the search splits into
chunks that run on a thread pool and merge back in bitmask order. The
ranking is a total order (correct desc, size asc, bitmask asc), so how the
work was split never shows in the output.

Probability matrices live on disk in the checkpoint container with a
sidecar `.order` file listing one digest per example. Members that
disagree on example order can't be averaged, and we refuse to try.
"""

from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
from logzero import logger
from pydantic import BaseModel, ConfigDict, field_validator

from app.errors import DataFormatError
from app.model.checkpoint import read_container, write_container
from app.schemas import NUM_CLASSES, SubsetResult, label_index

MAX_MEMBERS = 20
ROW_SUM_TOLERANCE = 1e-6
PROBA_SUFFIX = ".proba"
ORDER_SUFFIX = ".order"


class ProbabilityMatrix(BaseModel):
    """One model's class probabilities, [examples x 6], rows summing to 1."""

    model_config = ConfigDict(arbitrary_types_allowed=True, protected_namespaces=())

    model_id: str
    probs: np.ndarray

    @field_validator("probs")
    @classmethod
    def rows_are_distributions(cls, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] != NUM_CLASSES:
            raise ValueError(f"expected [examples x {NUM_CLASSES}], got {v.shape}")
        if v.size and (v.min() < 0.0 or v.max() > 1.0 + ROW_SUM_TOLERANCE):
            raise ValueError("probabilities must lie in [0, 1]")
        if v.size and np.max(np.abs(v.sum(axis=1) - 1.0)) > ROW_SUM_TOLERANCE:
            raise ValueError(f"rows must sum to 1 within {ROW_SUM_TOLERANCE}")
        return v

    @property
    def num_examples(self) -> int:
        return self.probs.shape[0]


# =============================================
# Averaging and search
# =============================================

def _stack(members: Sequence[ProbabilityMatrix]) -> np.ndarray:
    if not members:
        raise ValueError("need at least one member")
    counts = {m.num_examples for m in members}
    if len(counts) != 1:
        raise ValueError(f"members disagree on example count: {sorted(counts)}")
    return np.stack([m.probs for m in members])


def _mean_of(stack: np.ndarray, indices: Sequence[int]) -> np.ndarray:
    return stack[list(indices)].sum(axis=0) / len(indices)


def average_probs(members: Sequence[ProbabilityMatrix], model_id: str = "ensemble") -> ProbabilityMatrix:
    """
    Cell-wise mean of the members' matrices.

    Raises:
        ValueError: no members, or mismatched example counts
    """
    stack = _stack(members)
    if len(members) == 1:
        return ProbabilityMatrix(model_id=model_id, probs=members[0].probs.copy())
    return ProbabilityMatrix(model_id=model_id, probs=_mean_of(stack, range(len(members))))


def predict_labels(probs: np.ndarray) -> np.ndarray:
    """Row argmax; np.argmax already picks the lowest index on ties."""
    return np.argmax(probs, axis=1)


def _members_of(mask: int, n: int) -> List[int]:
    return [i for i in range(n) if mask >> i & 1]


def _score_chunk(stack: np.ndarray, gold: np.ndarray, masks: range) -> List[Tuple[int, int, int]]:
    n = stack.shape[0]
    out = []
    for mask in masks:
        members = _members_of(mask, n)
        predicted = predict_labels(_mean_of(stack, members))
        out.append((mask, len(members), int(np.sum(predicted == gold))))
    return out


def _gold_indices(gold: Sequence[Union[int, str]]) -> np.ndarray:
    return np.array([label_index(g) if isinstance(g, str) else int(g) for g in gold], dtype=np.int64)


def search_best_subset(members: Sequence[ProbabilityMatrix], gold: Sequence[Union[int, str]],
                       jobs: int = 1) -> List[SubsetResult]:
    """
    Score every non-empty subset of members and rank them.

    Args:
        members: 1..20 probability matrices over the same examples
        gold: Gold labels (names or class indices), one per example
        jobs: Worker threads for the enumeration

    Returns:
        All 2^n - 1 SubsetResults, best first

    Raises:
        ValueError: zero or too many members, or label/probability length mismatch
    """
    n = len(members)
    if n == 0:
        raise ValueError("search_best_subset needs at least one member")
    if n > MAX_MEMBERS:
        raise ValueError(f"exhaustive search supports at most {MAX_MEMBERS} members, got {n}")
    stack = _stack(members)
    gold_idx = _gold_indices(gold)
    if gold_idx.shape[0] != stack.shape[1]:
        raise ValueError(f"{gold_idx.shape[0]} gold labels for {stack.shape[1]} examples")
    if gold_idx.size == 0:
        raise ValueError("no examples to score")

    total = (1 << n) - 1
    workers = max(1, min(jobs, total))
    step = -(-total // workers)
    chunks = [range(lo, min(lo + step, total + 1)) for lo in range(1, total + 1, step)]
    logger.info(f"Scoring {total} subsets of {n} members on {gold_idx.size} examples ({len(chunks)} chunks)")

    if workers == 1:
        scored = [row for chunk in chunks for row in _score_chunk(stack, gold_idx, chunk)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            scored = [row for part in pool.map(lambda c: _score_chunk(stack, gold_idx, c), chunks) for row in part]

    scored.sort(key=lambda r: (-r[2], r[1], r[0]))
    names = [m.model_id for m in members]
    size = gold_idx.size
    return [
        SubsetResult(
            bitmask=mask,
            size=k,
            correct=correct,
            accuracy=correct / size,
            members=[names[i] for i in _members_of(mask, n)],
        )
        for mask, k, correct in scored
    ]


def best_by_size(results: Sequence[SubsetResult]) -> Dict[int, SubsetResult]:
    """Best subset for each ensemble size, using the search's own ranking order."""
    best: Dict[int, SubsetResult] = {}
    for result in sorted(results, key=lambda r: (-r.correct, r.size, r.bitmask)):
        best.setdefault(result.size, result)
    return dict(sorted(best.items()))


# =============================================
# On-disk cache
# =============================================

def save_proba(path: str, matrix: ProbabilityMatrix, order: Sequence[str]) -> None:
    """Write the matrix (container tensor `proba`) and its `.order` manifest."""
    if len(order) != matrix.num_examples:
        raise ValueError(f"{len(order)} order entries for {matrix.num_examples} rows")
    meta = {"kind": "proba", "model_id": matrix.model_id, "num_examples": str(matrix.num_examples)}
    write_container(path, meta, {"proba": matrix.probs})
    Path(str(path) + ORDER_SUFFIX).write_text("".join(f"{d}\n" for d in order), encoding="utf-8")


def load_proba(path: str) -> Tuple[ProbabilityMatrix, List[str]]:
    """
    Raises:
        DataFormatError: not a proba container, missing manifest, or inconsistent sizes
    """
    meta, tensors = read_container(path)
    if meta.get("kind") != "proba" or "proba" not in tensors:
        raise DataFormatError(f"{path}: not a probability cache")
    order_path = Path(str(path) + ORDER_SUFFIX)
    try:
        order = order_path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise DataFormatError(f"{path}: missing example-order manifest ({e})")
    probs = tensors["proba"].astype(np.float64)
    if len(order) != probs.shape[0] or meta.get("num_examples") != str(probs.shape[0]):
        raise DataFormatError(f"{path}: manifest lists {len(order)} examples, matrix has {probs.shape[0]}")
    try:
        matrix = ProbabilityMatrix(model_id=meta.get("model_id", Path(path).stem), probs=probs)
    except ValueError as e:
        raise DataFormatError(f"{path}: {e}")
    return matrix, order


def load_proba_dir(directory: str) -> Tuple[List[ProbabilityMatrix], List[str]]:
    """
    Every `*.proba` in a directory, in filename order.

    Raises:
        DataFormatError: no caches, or members that disagree on example order
    """
    paths = sorted(Path(directory).glob(f"*{PROBA_SUFFIX}"))
    if not paths:
        raise DataFormatError(f"no {PROBA_SUFFIX} files in {directory}")
    members: List[ProbabilityMatrix] = []
    reference: List[str] = []
    for path in paths:
        matrix, order = load_proba(str(path))
        if not members:
            reference = order
        elif order != reference:
            raise DataFormatError(f"{path}: example order differs from {paths[0].name}")
        members.append(matrix)
    return members, reference
