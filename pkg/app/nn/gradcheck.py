"""
Finite-difference gradient checking.

Run these in float64. In float32 the central difference is mostly rounding
noise and the check tells you nothing.
"""

from typing import Callable, Dict, Iterable, Optional

import numpy as np

from app.nn.tensor import Tensor


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-6) -> float:
    """max |a - n| / max(|a| + |n|, floor), elementwise."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.abs(analytic) + np.abs(numeric), floor)
    return float(np.max(np.abs(analytic - numeric) / denom)) if analytic.size else 0.0


def numerical_gradient(loss_fn: Callable[[], Tensor], param: Tensor, eps: float = 1e-5,
                       indices: Optional[Iterable[int]] = None) -> np.ndarray:
    """
    Central differences of loss_fn() with respect to param, perturbing in place.

    Args:
        loss_fn: Builds a fresh graph and returns a scalar Tensor
        param: The tensor to wiggle
        eps: Step size
        indices: Flat indices to probe; all of them when None
    """
    flat = param.data.reshape(-1)
    grad = np.zeros(flat.shape, dtype=np.float64)
    probe = range(flat.size) if indices is None else indices
    for i in probe:
        original = flat[i]
        flat[i] = original + eps
        plus = loss_fn().item()
        flat[i] = original - eps
        minus = loss_fn().item()
        flat[i] = original
        grad[i] = (plus - minus) / (2 * eps)
    return grad.reshape(param.shape)


def check_gradients(loss_fn: Callable[[], Tensor], params: Dict[str, Tensor], eps: float = 1e-5,
                    max_probes: Optional[int] = None, rng: Optional[np.random.Generator] = None) -> Dict[str, float]:
    """
    Compare backprop against central differences for every named tensor.

    Returns:
        name -> max relative error
    """
    for p in params.values():
        p.zero_grad()
    loss_fn().backward()
    analytic = {name: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data)) for name, p in params.items()}

    errors: Dict[str, float] = {}
    for name, p in params.items():
        indices = None
        if max_probes is not None and p.size > max_probes:
            picker = rng if rng is not None else np.random.default_rng(0)
            indices = picker.choice(p.size, size=max_probes, replace=False)
        numeric = numerical_gradient(loss_fn, p, eps=eps, indices=indices)
        if indices is None:
            errors[name] = relative_error(analytic[name], numeric)
        else:
            errors[name] = relative_error(analytic[name].reshape(-1)[indices], numeric.reshape(-1)[indices])
    return errors
