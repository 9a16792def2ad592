"""
Optimizers over a named parameter registry.

Both steps take {name: Tensor} and read gradients off the tensors. A
registered parameter without a gradient means the graph never reached it,
which is always a bug upstream, so it raises instead of skipping.
"""

from typing import Dict, Mapping

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.nn.tensor import Tensor


class MissingGradient(ValueError):
    """A registered parameter came out of backward() without a gradient."""


class OptimizerState(BaseModel):
    """Adam moments per parameter name, plus the step counter."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    m: Dict[str, np.ndarray] = Field(default_factory=dict)
    v: Dict[str, np.ndarray] = Field(default_factory=dict)
    t: int = Field(default=0, ge=0)


def _grads(params: Mapping[str, Tensor]) -> Dict[str, np.ndarray]:
    missing = sorted(name for name, p in params.items() if p.grad is None)
    if missing:
        raise MissingGradient(f"no gradient for: {', '.join(missing)}")
    return {name: p.grad for name, p in params.items()}


def adam_step(params: Mapping[str, Tensor], state: OptimizerState, lr: float) -> OptimizerState:
    """
    One bias-corrected Adam update, in place.

    Args:
        params: Parameter registry, gradients populated
        state: Moments and step counter (updated in place and returned)
        lr: Learning rate for this step

    Raises:
        MissingGradient: a parameter has no gradient
    """
    grads = _grads(params)
    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t

    for name, p in params.items():
        g = grads[name]
        if name not in state.m:
            state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        m, v = state.m[name], state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)

        m_hat = m / bc1
        v_hat = v / bc2
        p.data -= (lr * m_hat / (np.sqrt(v_hat) + state.eps)).astype(p.dtype, copy=False)
    return state


def sgd_step(params: Mapping[str, Tensor], lr: float) -> None:
    """w <- w - lr * g, in place."""
    grads = _grads(params)
    for name, p in params.items():
        p.data -= (lr * grads[name]).astype(p.dtype, copy=False)
