"""Schedule arithmetic, optimizer steps, and the training loop."""

import math

import numpy as np
import pytest

from app.errors import NumericalError
from app.nn import tensor as T
from app.nn.tensor import Tensor
from app.schemas import EpochRecord
from app.training.optim import MissingGradient, OptimizerState, adam_step, sgd_step
from app.training.schedule import ScheduleState, batches_per_epoch, stlr, total_iterations
from app.training.trainer import fit, history_csv, smoothed
from app.utils.dataset import labeled_set, prepare_examples

from tests.helpers import random_labeled_set, synthetic

# 2397 batches x 10 epochs, the full-scale run
FULL = ScheduleState(total=23970, cut_frac=0.1, ratio=32, lr_max=0.001)


# =============================================
# STLR
# =============================================

def test_stlr_endpoints_and_peak():
    assert abs(stlr(0, FULL) - 3.125e-5) < 1e-12
    assert abs(stlr(2397, FULL) - 1.0e-3) < 1e-12
    assert abs(stlr(23970, FULL) - 3.125e-5) < 1e-12


def test_stlr_is_unimodal():
    rates = [FULL(t) for t in range(FULL.total + 1)]
    peak = int(np.argmax(rates))
    assert peak == FULL.cut
    assert all(a <= b for a, b in zip(rates[:peak], rates[1:peak + 1]))
    assert all(a >= b for a, b in zip(rates[peak:], rates[peak + 1:]))


def test_stlr_rejects_out_of_range():
    with pytest.raises(ValueError):
        stlr(-1, FULL)
    with pytest.raises(ValueError):
        stlr(FULL.total + 1, FULL)


def test_tiny_runs_still_get_a_warmup_step():
    sched = ScheduleState(total=5, cut_frac=0.1, ratio=32, lr_max=0.001)
    assert sched.cut == 1
    assert stlr(1, sched) == pytest.approx(0.001)


def test_batches_keep_the_short_tail():
    # 153,383 examples at batch 64: the last batch has 39
    assert batches_per_epoch(153383, 64) == 2397
    assert 153383 - 2396 * 64 == 39
    assert total_iterations(153383, 64, 10) == 23970


def test_batching_rejects_nonsense():
    with pytest.raises(ValueError):
        batches_per_epoch(0, 64)
    with pytest.raises(ValueError):
        batches_per_epoch(10, 0)


def test_schedule_for_run():
    sched = ScheduleState.for_run(153383, 64, 10)
    assert sched.total == 23970
    assert sched.cut == 2397


# =============================================
# Optimizers
# =============================================

def _param(values, grad):
    p = Tensor(np.array(values, dtype=np.float64), requires_grad=True, dtype=np.float64)
    p.grad = np.array(grad, dtype=np.float64)
    return p


def test_adam_matches_hand_computation():
    p = _param([1.0, -2.0], [0.5, -0.1])
    state = OptimizerState()
    lr = 0.01
    g = np.array([0.5, -0.1])
    expected = np.array([1.0, -2.0])
    m = np.zeros(2)
    v = np.zeros(2)
    for t in (1, 2, 3):
        adam_step({"w": p}, state, lr)
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        expected = expected - lr * (m / (1 - 0.9 ** t)) / (np.sqrt(v / (1 - 0.999 ** t)) + 1e-8)
    assert state.t == 3
    assert np.allclose(p.data, expected, atol=1e-12)


def test_adam_first_step_moves_by_lr():
    # bias correction makes the first step ~lr * sign(g)
    p = _param([0.0], [3.0])
    adam_step({"w": p}, OptimizerState(), 0.001)
    assert p.data[0] == pytest.approx(-0.001, rel=1e-6)


def test_adam_missing_gradient():
    p = Tensor(np.zeros(2), requires_grad=True)
    with pytest.raises(MissingGradient):
        adam_step({"w": p}, OptimizerState(), 0.001)


def test_sgd_step():
    p = _param([1.0], [2.0])
    sgd_step({"w": p}, 0.1)
    assert p.data[0] == pytest.approx(0.8)


# =============================================
# The loop
# =============================================

def test_fit_is_deterministic(toy_config):
    train, val = random_labeled_set(40, 0), random_labeled_set(12, 1)
    cfg = toy_config.with_overrides({"epochs": "2"})
    a = fit(train, val, cfg)
    b = fit(train, val, cfg)
    assert a.step_losses == b.step_losses
    assert all(np.array_equal(x, y) for x, y in zip(a.model.snapshot().values(), b.model.snapshot().values()))


def test_fit_history_and_selection(toy_config):
    train, val = random_labeled_set(40, 0), random_labeled_set(12, 1)
    result = fit(train, val, toy_config)
    assert [r.epoch for r in result.history] == [1, 2, 3]
    best = max(r.val_accuracy for r in result.history)
    assert result.best_val_accuracy == best
    # ties go to the earliest epoch
    assert result.best_epoch == next(r.epoch for r in result.history if r.val_accuracy == best)
    assert result.total_steps == 3 * math.ceil(40 / 16)


def test_fit_learns_synthetic_cues(toy_config, small_split):
    train, val = small_split
    result = fit(labeled_set(train), labeled_set(val), toy_config.with_overrides({"epochs": "6"}))
    assert result.history[-1].train_loss < result.history[0].train_loss
    assert result.best_val_accuracy > 0.3


def test_sgd_path_runs(toy_config):
    train, val = random_labeled_set(20, 2), random_labeled_set(6, 3)
    cfg = toy_config.with_overrides({"optimizer": "sgd", "sgd_lr": "0.01", "epochs": "1"})
    assert fit(train, val, cfg).total_steps == 2


def test_non_finite_loss_raises(toy_config, monkeypatch):
    monkeypatch.setattr(T, "softmax_cross_entropy", lambda logits, targets: Tensor(np.array(np.nan)))
    train, val = random_labeled_set(20, 2), random_labeled_set(6, 3)
    with pytest.raises(NumericalError, match="seed 0"):
        fit(train, val, toy_config)


def test_fit_rejects_empty_sets(toy_config):
    empty = random_labeled_set(0, 0)
    with pytest.raises(ValueError):
        fit(empty, random_labeled_set(4, 0), toy_config)
    with pytest.raises(ValueError):
        fit(random_labeled_set(4, 0), empty, toy_config)


@pytest.mark.slow
def test_overfits_a_tiny_synthetic_set(toy_config, tokenizer):
    data = labeled_set(prepare_examples(synthetic(32, seed=5), tokenizer))
    cfg = toy_config.with_overrides({
        "epochs": "200",
        "batch_size": "32",
        "dropout_word": "0",
        "dropout_sentence": "0",
        "dropout_fc": "0",
    })
    result = fit(data, data, cfg)
    assert result.best_val_accuracy == 1.0

    curve = smoothed(result.step_losses, window=10)
    assert len(curve) == 20
    assert all(later <= earlier for earlier, later in zip(curve, curve[1:])), curve


def test_smoothed_drops_ragged_tail():
    assert smoothed([1, 2, 3, 4, 5], window=2) == [1.5, 3.5]


def test_history_csv():
    csv = history_csv([EpochRecord(epoch=1, train_loss=1.23456, val_accuracy=0.5)])
    assert csv == "epoch,train_loss,val_accuracy\n1,1.2346,0.5000\n"
