"""
Slanted triangular learning rates.

A short linear climb to lr_max, then a long linear slide back down:

    lr
    ^     /\
    |    /  `-.
    |   /      `-.
    |  /          `-.
    +------------------> t
       cut           T

At t = 0 and t = T the rate is lr_max / ratio. The short final batch of an
epoch counts as a full step, so T = epochs * ceil(n / batch_size).
"""

import math

from pydantic import BaseModel, Field


def batches_per_epoch(num_examples: int, batch_size: int) -> int:
    """ceil(n / batch_size); the short last batch is kept."""
    if num_examples < 1:
        raise ValueError("cannot batch an empty dataset")
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    return math.ceil(num_examples / batch_size)


def total_iterations(num_examples: int, batch_size: int, epochs: int) -> int:
    if epochs < 1:
        raise ValueError(f"epochs must be >= 1, got {epochs}")
    return epochs * batches_per_epoch(num_examples, batch_size)


class ScheduleState(BaseModel):
    """Total iterations and the peak position."""

    total: int = Field(ge=1)
    cut_frac: float = Field(default=0.1, gt=0.0, lt=1.0)
    ratio: float = Field(default=32.0, gt=1.0)
    lr_max: float = Field(default=0.001, gt=0.0)

    @property
    def cut(self) -> int:
        # tiny toy runs would otherwise get cut = 0
        return max(1, math.floor(self.cut_frac * self.total))

    @classmethod
    def for_run(cls, num_examples: int, batch_size: int, epochs: int, cut_frac: float = 0.1,
                ratio: float = 32.0, lr_max: float = 0.001) -> "ScheduleState":
        return cls(
            total=total_iterations(num_examples, batch_size, epochs),
            cut_frac=cut_frac,
            ratio=ratio,
            lr_max=lr_max,
        )

    def __call__(self, t: int) -> float:
        return stlr(t, self)


def stlr(t: int, sched: ScheduleState) -> float:
    """
    Learning rate at iteration t.

    Args:
        t: Completed optimizer steps so far, 0 <= t <= T
        sched: Schedule parameters

    Returns:
        lr_max * (1 + p * (ratio - 1)) / ratio

    Raises:
        ValueError: t outside [0, T]
    """
    if t < 0 or t > sched.total:
        raise ValueError(f"iteration {t} outside [0, {sched.total}]")
    cut = sched.cut
    if t < cut:
        p = t / cut
    else:
        p = 1.0 - (t - cut) / (cut * (1.0 / sched.cut_frac - 1.0))
    # float rounding can push p a hair below zero at t = T
    p = max(p, 0.0)
    return sched.lr_max * (1.0 + p * (sched.ratio - 1.0)) / sched.ratio
