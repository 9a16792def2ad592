"""
Single-layer BiLSTM over the encoded words.

Standard gates, no peepholes, no coupling:

    i = σ(W_i x + U_i h + b_i)      f = σ(W_f x + U_f h + b_f)
    o = σ(W_o x + U_o h + b_o)      g = tanh(W_g x + U_g h + b_g)
    c' = f ⊙ c + i ⊙ g              h' = o ⊙ tanh(c')

Both directions only see the valid steps of each sequence; padded steps
emit zeros and keep the state at zero, so the backward direction starts
fresh at the last real token.
"""

from typing import Dict, Mapping, Tuple

import numpy as np

from app.model.encoder import EncodedBatch
from app.nn import tensor as T

GATES = ("i", "f", "o", "g")
DIRECTIONS = ("fwd", "bwd")


def direction_params(params: Mapping[str, T.Tensor], direction: str) -> Dict[str, T.Tensor]:
    """Strip the `lstm.<direction>.` prefix: {'W_i': ..., 'U_i': ..., 'b_i': ...}."""
    prefix = f"lstm.{direction}."
    return {name[len(prefix):]: p for name, p in params.items() if name.startswith(prefix)}


def lstm_cell(x_t: T.Tensor, h_prev: T.Tensor, c_prev: T.Tensor,
              p: Mapping[str, T.Tensor]) -> Tuple[T.Tensor, T.Tensor]:
    """One step. x_t [batch x in], h_prev/c_prev [batch x hidden]."""

    def gate(name: str) -> T.Tensor:
        pre = T.add(T.matmul(x_t, p[f"W_{name}"]), T.matmul(h_prev, p[f"U_{name}"]))
        return T.bias_add(pre, p[f"b_{name}"])

    i = T.sigmoid(gate("i"))
    f = T.sigmoid(gate("f"))
    o = T.sigmoid(gate("o"))
    g = T.tanh(gate("g"))
    c_t = T.add(T.mul(f, c_prev), T.mul(i, g))
    h_t = T.mul(o, T.tanh(c_t))
    return h_t, c_t


def _run_direction(x: T.Tensor, step_masks: np.ndarray, p: Mapping[str, T.Tensor],
                   hidden: int, reverse: bool):
    batch, steps = x.shape[0], x.shape[1]
    h = T.Tensor(np.zeros((batch, hidden), dtype=x.dtype))
    c = T.Tensor(np.zeros((batch, hidden), dtype=x.dtype))
    outputs = [None] * steps
    order = range(steps - 1, -1, -1) if reverse else range(steps)
    for t in order:
        h_new, c_new = lstm_cell(T.time_step(x, t), h, c, p)
        mask = step_masks[t]
        h = T.mul(h_new, mask)
        c = T.mul(c_new, mask)
        outputs[t] = h
    return T.stack(outputs, axis=1)


def bilstm_forward(batch: EncodedBatch, params: Mapping[str, T.Tensor]) -> T.Tensor:
    """
    [batch x T x word_dim] -> [batch x T x 2*hidden], forward half first.
    """
    x = batch.vectors
    n, steps, dim = x.shape
    valid = np.arange(steps)[None, :] < batch.lengths[:, None]  # [batch x T]
    # padded inputs are zeroed before anything touches them
    x = T.mul(x, np.broadcast_to(valid[:, :, None], (n, steps, dim)).astype(x.dtype))

    fwd = direction_params(params, "fwd")
    hidden = fwd["U_i"].shape[0]
    step_masks = np.ascontiguousarray(
        np.broadcast_to(valid.T[:, :, None], (steps, n, hidden)).astype(x.dtype)
    )

    forward = _run_direction(x, step_masks, fwd, hidden, reverse=False)
    backward = _run_direction(x, step_masks, direction_params(params, "bwd"), hidden, reverse=True)
    return T.concat([forward, backward], axis=-1)
