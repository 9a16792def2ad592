"""
The numerical core: tensors with reverse-mode gradients, seeded streams,
and a gradient checker to keep both honest.
"""

from .rng import make_rng
from .tensor import (
    ShapeError,
    Tensor,
    add,
    bias_add,
    concat,
    dropout,
    elementwise,
    embedding,
    last_valid,
    masked_max_pool,
    masked_mean_pool,
    matmul,
    mul,
    relu,
    reshape,
    sigmoid,
    softmax,
    softmax_cross_entropy,
    stack,
    tanh,
    time_step,
    topological_order,
)

__all__ = [
    "make_rng",
    "ShapeError",
    "Tensor",
    "add",
    "bias_add",
    "concat",
    "dropout",
    "elementwise",
    "embedding",
    "last_valid",
    "masked_max_pool",
    "masked_mean_pool",
    "matmul",
    "mul",
    "relu",
    "reshape",
    "sigmoid",
    "softmax",
    "softmax_cross_entropy",
    "stack",
    "tanh",
    "time_step",
    "topological_order",
]
