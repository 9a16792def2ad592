"""
Ablation sweeps - same seed, same data, one knob changed per row.

A SweepSpec is a base override set plus a list of cells. Every cell is
trained from scratch with the base seed and compared to the base run:

    name            overrides               accuracy  macro_f1  delta
    base                                    0.6120    0.6010    0.0000
    no_emoji        strip_emoji=true        0.5930    0.5870   -1.9000

Delta is in percentage points. Preprocessing keys (strip_emoji,
lowercase) re-tokenize the data for that cell only.

Specs come from a JSON file or a named preset.
"""

import json
from pathlib import Path
from typing import Dict, List, NamedTuple, Sequence, Tuple

import numpy as np
from logzero import logger
from pydantic import BaseModel, Field, ValidationError

from app.analysis.metrics import compute_metrics
from app.config import ExperimentConfig, as_text
from app.errors import ConfigError, NumericalError
from app.schemas import EMOTIONS, RawTweet, SweepRow
from app.tokenizer import EmojiDatabase, TweetTokenizer
from app.training.trainer import fit
from app.utils.dataset import LabeledSet, labeled_set, prepare_examples
from app.utils.parallel import run_jobs

DROPOUT_GRID = (0.1, 0.3, 0.5)
SGD_LEARNING_RATES = (1.0, 0.1, 0.01, 0.001)


class SweepCell(BaseModel):
    name: str = Field(..., min_length=1)
    overrides: Dict[str, str] = Field(default_factory=dict)


class SweepSpec(BaseModel):
    """Base overrides plus the cells to compare against them."""

    name: str = "sweep"
    base: Dict[str, str] = Field(default_factory=dict)
    cells: List[SweepCell] = Field(default_factory=list)

    def resolve(self, config: ExperimentConfig) -> Tuple[ExperimentConfig, List[Tuple[str, Dict[str, str], ExperimentConfig]]]:
        """
        Apply the overrides up front so a typo fails before any training.

        Raises:
            ConfigError: unknown key, bad value, or a duplicate cell name
        """
        names = [c.name for c in self.cells]
        dupes = sorted({n for n in names if names.count(n) > 1} | ({"base"} & set(names)))
        if dupes:
            raise ConfigError(f"duplicate sweep cell names: {', '.join(dupes)}")
        base = config.with_overrides(self.base)
        return base, [(c.name, c.overrides, base.with_overrides(c.overrides)) for c in self.cells]


def dropout_preset() -> SweepSpec:
    """3x3 grid: rows are word/fc dropout, columns sentence dropout."""
    cells = [
        SweepCell(
            name=f"dropout_wf{as_text(row)}_s{as_text(col)}",
            overrides={"dropout_word": as_text(row), "dropout_fc": as_text(row), "dropout_sentence": as_text(col)},
        )
        for row in DROPOUT_GRID
        for col in DROPOUT_GRID
    ]
    return SweepSpec(name="dropout", cells=cells)


def hidden_preset(config: ExperimentConfig) -> SweepSpec:
    """Quarter, half and double the LSTM width."""
    h = config.model.lstm_hidden
    sizes = sorted({max(1, h // 4), max(1, h // 2), h * 2} - {h})
    return SweepSpec(name="hidden", cells=[SweepCell(name=f"lstm_hidden_{s}", overrides={"lstm_hidden": str(s)}) for s in sizes])


def optimizer_preset() -> SweepSpec:
    return SweepSpec(
        name="optimizer",
        cells=[
            SweepCell(name=f"sgd_lr_{as_text(lr)}", overrides={"optimizer": "sgd", "sgd_lr": as_text(lr)})
            for lr in SGD_LEARNING_RATES
        ],
    )


def ablation_preset(config: ExperimentConfig) -> SweepSpec:
    """One row per architectural choice, plus the hidden-size and SGD rows."""
    cells = [
        SweepCell(name="no_emoji", overrides={"strip_emoji": "true"}),
        SweepCell(name="embedding_lookup", overrides={"encoder": "embedding_lookup"}),
        SweepCell(name="concat_pooling", overrides={"pooling": "concat_max_mean_last"}),
    ]
    cells += hidden_preset(config).cells + optimizer_preset().cells
    return SweepSpec(name="ablation", cells=cells)


PRESETS = ("ablation", "dropout", "hidden", "optimizer")


def load_sweep_spec(source: str, config: ExperimentConfig) -> SweepSpec:
    """
    A preset name or a path to a SweepSpec JSON file.

    Raises:
        ConfigError: unreadable or invalid JSON, or an unknown preset
    """
    if source == "ablation":
        return ablation_preset(config)
    if source == "dropout":
        return dropout_preset()
    if source == "hidden":
        return hidden_preset(config)
    if source == "optimizer":
        return optimizer_preset()
    path = Path(source)
    if not path.exists():
        raise ConfigError(f"{source!r} is neither a preset ({', '.join(PRESETS)}) nor a file")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
        raw["base"] = {k: as_text(v) for k, v in raw.get("base", {}).items()}
        for cell in raw.get("cells", []):
            cell["overrides"] = {k: as_text(v) for k, v in cell.get("overrides", {}).items()}
        return SweepSpec.model_validate(raw)
    except (OSError, json.JSONDecodeError, AttributeError, TypeError) as e:
        raise ConfigError(f"Cannot read sweep spec {source}: {e}")
    except ValidationError as e:
        raise ConfigError(f"Invalid sweep spec {source}: {e}")


# =============================================
# Running
# =============================================

class CellJob(NamedTuple):
    name: str
    train: LabeledSet
    val: LabeledSet
    config: ExperimentConfig


class CellScore(NamedTuple):
    name: str
    accuracy: float
    macro_f1: float


def _run_cell(job: CellJob) -> CellScore:
    try:
        result = fit(job.train, job.val, job.config)
    except NumericalError as e:
        # one diverging cell (SGD at lr=1, say) shouldn't sink the whole table
        logger.error(f"sweep cell {job.name} diverged: {e}")
        return CellScore(job.name, float("nan"), float("nan"))
    predicted = np.argmax(result.model.predict_proba(job.val.tokens), axis=1)
    report = compute_metrics([EMOTIONS[i] for i in job.val.labels], [EMOTIONS[i] for i in predicted])
    logger.info(f"sweep cell {job.name}: acc={report.accuracy:.4f} macro_f1={report.macro_f1:.4f}")
    return CellScore(job.name, report.accuracy, report.macro_f1)


class _Preprocessed:
    """Tokenized train/val per (lowercase, strip_emoji), built on demand."""

    def __init__(self, train: Sequence[RawTweet], val: Sequence[RawTweet], db: EmojiDatabase):
        self.train, self.val, self.db = train, val, db
        self._cache: Dict[Tuple[bool, bool], Tuple[LabeledSet, LabeledSet]] = {}

    def __call__(self, config: ExperimentConfig) -> Tuple[LabeledSet, LabeledSet]:
        key = (config.preprocess.lowercase, config.preprocess.strip_emoji)
        if key not in self._cache:
            tokenizer = TweetTokenizer(self.db, lowercase=key[0])
            self._cache[key] = (
                labeled_set(prepare_examples(self.train, tokenizer, strip=key[1])),
                labeled_set(prepare_examples(self.val, tokenizer, strip=key[1])),
            )
        return self._cache[key]


def run_sweep(spec: SweepSpec, config: ExperimentConfig, train: Sequence[RawTweet], val: Sequence[RawTweet],
              db: EmojiDatabase, jobs: int = 1) -> List[SweepRow]:
    """
    Base run first, then every cell, each scored on `val`.

    Returns:
        SweepRows in spec order, base first, delta against base in points

    Raises:
        ConfigError: invalid overrides (checked before anything trains)
    """
    base, cells = spec.resolve(config)
    data = _Preprocessed(train, val, db)
    work = [CellJob("base", *data(base), base)]
    work += [CellJob(name, *data(cfg), cfg) for name, _, cfg in cells]
    logger.info(f"Sweep {spec.name!r}: base + {len(cells)} cells")
    scores = run_jobs(_run_cell, work, jobs)

    base_acc = scores[0].accuracy
    overrides = [dict(spec.base)] + [{**spec.base, **ov} for _, ov, _ in cells]
    return [
        SweepRow(
            name=s.name,
            overrides=ov,
            accuracy=s.accuracy,
            macro_f1=s.macro_f1,
            delta=100.0 * (s.accuracy - base_acc),
        )
        for s, ov in zip(scores, overrides)
    ]
