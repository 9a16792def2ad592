"""
The training loop.

Per epoch: reshuffle, walk the batches (short last one included), one
optimizer step per batch, then score the validation set in eval mode. The
epoch with the best validation accuracy wins; on a tie the earlier one
stays.

Randomness comes from three independent streams derived from the seed
(init, shuffle, dropout), so the whole run is a pure function of
(seed, config, data).
"""

import math
from typing import List, Optional

import numpy as np
from logzero import logger
from pydantic import BaseModel, ConfigDict, Field
from tqdm import tqdm

from app.config import ExperimentConfig
from app.errors import NumericalError
from app.model.classifier import IESTClassifier
from app.model.encoder import Vocabulary
from app.nn import tensor as T
from app.nn.rng import make_rng
from app.schemas import EpochRecord
from app.training.optim import OptimizerState, adam_step, sgd_step
from app.training.schedule import ScheduleState, batches_per_epoch
from app.utils.dataset import LabeledSet


class FitResult(BaseModel):
    """The selected model plus everything that happened on the way there."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    model: IESTClassifier
    best_epoch: int
    best_val_accuracy: float
    history: List[EpochRecord] = Field(default_factory=list)
    step_losses: List[float] = Field(default_factory=list)
    total_steps: int


def evaluate_accuracy(model: IESTClassifier, data: LabeledSet) -> float:
    """Eval-mode accuracy, argmax ties to the lowest class index."""
    predicted = np.argmax(model.predict_proba(data.tokens), axis=1)
    return float(np.mean(predicted == data.labels))


def _param_summary(model: IESTClassifier) -> str:
    worst = max(model.params.items(), key=lambda kv: float(np.max(np.abs(kv[1].data))))
    finite = all(np.all(np.isfinite(p.data)) for p in model.params.values())
    return f"largest |param| in {worst[0]} = {np.max(np.abs(worst[1].data)):.4g}, all finite: {finite}"


def fit(train: LabeledSet, val: LabeledSet, config: ExperimentConfig,
        vocab: Optional[Vocabulary] = None, progress: bool = False) -> FitResult:
    """
    Train one model and keep the best epoch.

    Args:
        train: Training tokens and labels
        val: Validation tokens and labels (selection only, never trained on)
        config: Model shape, optimizer, schedule, seed
        vocab: Lookup-encoder vocabulary; built from `train` when omitted
        progress: Show a tqdm bar per epoch

    Returns:
        FitResult with the best-epoch parameters loaded into the model

    Raises:
        ValueError: empty train or validation set
        NumericalError: the loss went NaN or infinite
    """
    if len(train) == 0:
        raise ValueError("cannot fit on an empty training set")
    if len(val) == 0:
        raise ValueError("cannot select a model without validation examples")

    mcfg, tcfg = config.model, config.train
    seed = tcfg.seed
    if mcfg.encoder == "embedding_lookup" and vocab is None:
        vocab = Vocabulary.build(train.tokens, min_count=mcfg.min_count)
        logger.info(f"Built vocabulary of {len(vocab)} entries (min_count={mcfg.min_count})")

    model = IESTClassifier.initialize(mcfg, seed=seed, vocab=vocab if mcfg.encoder == "embedding_lookup" else None)
    shuffle_rng = make_rng(seed, "shuffle")
    dropout_rng = make_rng(seed, "dropout")

    n = len(train)
    per_epoch = batches_per_epoch(n, tcfg.batch_size)
    sched = ScheduleState.for_run(n, tcfg.batch_size, tcfg.epochs, tcfg.cut_frac, tcfg.ratio, tcfg.lr_max)
    state = OptimizerState(beta1=tcfg.adam_beta1, beta2=tcfg.adam_beta2, eps=tcfg.adam_eps)
    logger.info(
        f"Training seed={seed} on {n} examples: {per_epoch} batches/epoch, "
        f"{sched.total} steps, optimizer={tcfg.optimizer}"
    )

    history: List[EpochRecord] = []
    step_losses: List[float] = []
    best_acc, best_epoch, best_params = -1.0, 0, None
    step = 0

    for epoch in range(1, tcfg.epochs + 1):
        order = shuffle_rng.permutation(n)
        loss_sum = 0.0
        for b in tqdm(range(per_epoch), desc=f"epoch {epoch}", leave=False, disable=not progress):
            idx = order[b * tcfg.batch_size:(b + 1) * tcfg.batch_size]
            batch = [train.tokens[i] for i in idx]

            model.zero_grad()
            logits, _ = model.forward(batch, train=True, rng=dropout_rng)
            loss = T.softmax_cross_entropy(logits, train.labels[idx])
            value = loss.item()
            if not math.isfinite(value):
                raise NumericalError(
                    f"non-finite loss {value} at epoch {epoch}, step {step} (seed {seed}); {_param_summary(model)}"
                )
            loss.backward()

            if tcfg.optimizer == "adam":
                lr = sched(step)
                adam_step(model.params, state, lr)
            else:
                lr = tcfg.sgd_lr
                sgd_step(model.params, lr)
            step += 1

            step_losses.append(value)
            loss_sum += value * len(idx)
            logger.debug(f"epoch {epoch} step {step}/{sched.total} loss={value:.5f} lr={lr:.3e}")

        val_acc = evaluate_accuracy(model, val)
        record = EpochRecord(epoch=epoch, train_loss=loss_sum / n, val_accuracy=val_acc)
        history.append(record)
        logger.info(f"epoch {epoch}: train_loss={record.train_loss:.4f} val_acc={val_acc:.4f} lr={lr:.3e}")

        if val_acc > best_acc:
            best_acc, best_epoch, best_params = val_acc, epoch, model.snapshot()

    model.restore(best_params)
    model.zero_grad()
    logger.info(f"Selected epoch {best_epoch} (val_acc={best_acc:.4f})")
    return FitResult(
        model=model,
        best_epoch=best_epoch,
        best_val_accuracy=best_acc,
        history=history,
        step_losses=step_losses,
        total_steps=step,
    )


def smoothed(values: List[float], window: int = 10) -> List[float]:
    """Means over consecutive non-overlapping windows; a ragged tail is dropped."""
    if window < 1:
        raise ValueError("window must be >= 1")
    full = len(values) // window
    return [float(np.mean(values[i * window:(i + 1) * window])) for i in range(full)]


def history_csv(history: List[EpochRecord]) -> str:
    """`epoch,train_loss,val_accuracy` with a header, 4-decimal floats."""
    rows = ["epoch,train_loss,val_accuracy"]
    rows += [f"{r.epoch},{r.train_loss:.4f},{r.val_accuracy:.4f}" for r in history]
    return "\n".join(rows) + "\n"
