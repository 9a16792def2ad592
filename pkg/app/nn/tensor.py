"""
Tensor kernel - numpy arrays that remember how they were made.

Each op returns a new Tensor holding its parents and a closure that pushes
the output gradient back into them. `backward()` walks the graph in reverse
topological order, so every node's closure runs exactly once and a leaf
parameter used in N places receives the sum of N contributions.

Broadcasting is deliberately narrow: elementwise ops take two tensors of the
same shape, or one of them scalar. Anything fancier (bias rows, masks) gets
its own named op so the gradient rule is explicit.
"""

from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

ArrayLike = Union["Tensor", np.ndarray, float, int]


class ShapeError(ValueError):
    """Two tensors that were supposed to fit together don't."""


class Tensor:
    """A dense array, an optional gradient, and the op that produced it."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "op")

    def __init__(self, data, requires_grad: bool = False, dtype=None, op: str = "leaf"):
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype.kind != "f":
            arr = arr.astype(np.float32)
        self.data: np.ndarray = arr
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self._parents: Tuple["Tensor", ...] = ()
        self._backward: Optional[Callable[[np.ndarray], None]] = None
        self.op = op

    # ------------------------------------------------------------------
    # plumbing
    # ------------------------------------------------------------------

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self) -> int:
        return int(self.data.size)

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data, dtype=self.dtype)

    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, g: np.ndarray, index=None) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        if index is None:
            self.grad += g
        else:
            self.grad[index] += g

    def backward(self, grad: Optional[np.ndarray] = None) -> None:
        """
        Reverse-mode sweep from this tensor.

        Args:
            grad: Upstream gradient; defaults to ones for a scalar output
        """
        if grad is None:
            if self.size != 1:
                raise ShapeError(f"backward() without grad needs a scalar, got shape {self.shape}")
            grad = np.ones_like(self.data)
        self.grad = np.asarray(grad, dtype=self.dtype).reshape(self.shape).copy()
        for node in reversed(topological_order(self)):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, op={self.op}, requires_grad={self.requires_grad})"

    def __add__(self, other: ArrayLike) -> "Tensor":
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other: ArrayLike) -> "Tensor":
        return mul(self, other)

    __rmul__ = __mul__

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)


def topological_order(root: Tensor) -> List[Tensor]:
    """
    Nodes reachable from `root` that need gradients, parents before children.

    Iterative so a 60-step BiLSTM doesn't hit the recursion limit.
    """
    order: List[Tensor] = []
    visited = set()
    stack: List[Tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in visited:
                stack.append((parent, False))
    return order


def _result(data: np.ndarray, parents: Sequence[Tensor], backward: Callable[[np.ndarray], None], op: str) -> Tensor:
    requires = any(p.requires_grad for p in parents)
    out = Tensor(data, requires_grad=requires, dtype=data.dtype, op=op)
    if requires:
        out._parents = tuple(parents)
        out._backward = backward
    return out


def as_tensor(value: ArrayLike, like: Optional[Tensor] = None) -> Tensor:
    if isinstance(value, Tensor):
        return value
    dtype = like.dtype if like is not None else None
    return Tensor(np.asarray(value, dtype=dtype), dtype=dtype)


def _is_scalar(t: Tensor) -> bool:
    return t.size == 1 and t.data.ndim <= 1


def _check_elementwise(name: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape and not (_is_scalar(a) or _is_scalar(b)):
        raise ShapeError(f"{name}: incompatible shapes {a.shape} and {b.shape} (only same-shape or scalar)")


def _reduce_to(g: np.ndarray, t: Tensor) -> np.ndarray:
    if g.shape == t.shape:
        return g
    return np.asarray(g.sum()).reshape(t.shape)


# ----------------------------------------------------------------------
# linear algebra
# ----------------------------------------------------------------------

def matmul(a: Tensor, b: Tensor) -> Tensor:
    """[m x k] @ [k x n] -> [m x n]."""
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: cannot multiply {a.shape} by {b.shape}")

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a._accumulate(g @ b.data.T)
        if b.requires_grad:
            b._accumulate(a.data.T @ g)

    return _result(a.data @ b.data, (a, b), backward, "matmul")


def bias_add(x: Tensor, b: Tensor) -> Tensor:
    """Add a [n] bias to every row of x[..., n]."""
    if b.data.ndim != 1 or x.shape[-1] != b.shape[0]:
        raise ShapeError(f"bias_add: bias {b.shape} does not match last axis of {x.shape}")

    def backward(g: np.ndarray) -> None:
        if x.requires_grad:
            x._accumulate(g)
        if b.requires_grad:
            b._accumulate(g.reshape(-1, b.shape[0]).sum(axis=0))

    return _result(x.data + b.data, (x, b), backward, "bias_add")


# ----------------------------------------------------------------------
# elementwise
# ----------------------------------------------------------------------

def add(a: ArrayLike, b: ArrayLike) -> Tensor:
    a = as_tensor(a, b if isinstance(b, Tensor) else None)
    b = as_tensor(b, a)
    _check_elementwise("add", a, b)

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a._accumulate(_reduce_to(g, a))
        if b.requires_grad:
            b._accumulate(_reduce_to(g, b))

    return _result(a.data + b.data, (a, b), backward, "add")


def mul(a: ArrayLike, b: ArrayLike) -> Tensor:
    a = as_tensor(a, b if isinstance(b, Tensor) else None)
    b = as_tensor(b, a)
    _check_elementwise("mul", a, b)

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a._accumulate(_reduce_to(g * b.data, a))
        if b.requires_grad:
            b._accumulate(_reduce_to(g * a.data, b))

    return _result(a.data * b.data, (a, b), backward, "mul")


def sigmoid(x: Tensor) -> Tensor:
    # tanh form never overflows
    s = (0.5 * (1.0 + np.tanh(0.5 * x.data))).astype(x.dtype, copy=False)

    def backward(g: np.ndarray) -> None:
        x._accumulate(g * s * (1.0 - s))

    return _result(s, (x,), backward, "sigmoid")


def tanh(x: Tensor) -> Tensor:
    t = np.tanh(x.data)

    def backward(g: np.ndarray) -> None:
        x._accumulate(g * (1.0 - t * t))

    return _result(t, (x,), backward, "tanh")


def relu(x: Tensor) -> Tensor:
    positive = x.data > 0

    def backward(g: np.ndarray) -> None:
        x._accumulate(g * positive)

    return _result(np.where(positive, x.data, 0).astype(x.dtype, copy=False), (x,), backward, "relu")


_ELEMENTWISE = {
    "add": add,
    "mul": mul,
    "sigmoid": sigmoid,
    "tanh": tanh,
    "relu": relu,
}


def elementwise(op: str, *args: ArrayLike) -> Tensor:
    """Dispatch by name: add, mul, sigmoid, tanh, relu."""
    try:
        fn = _ELEMENTWISE[op]
    except KeyError:
        raise ValueError(f"Unknown elementwise op {op!r}; expected one of {', '.join(_ELEMENTWISE)}")
    return fn(*args)


# ----------------------------------------------------------------------
# shape ops
# ----------------------------------------------------------------------

def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    out = x.data.reshape(tuple(shape))

    def backward(g: np.ndarray) -> None:
        x._accumulate(g.reshape(x.shape))

    return _result(out, (x,), backward, "reshape")


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    """Join along one axis; every other extent must agree."""
    if not tensors:
        raise ShapeError("concat: nothing to concatenate")
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        raise ShapeError(f"concat: incompatible shapes {[t.shape for t in tensors]} on axis {axis}")
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g: np.ndarray) -> None:
        for t, piece in zip(tensors, np.split(g, bounds, axis=axis)):
            if t.requires_grad:
                t._accumulate(piece)

    return _result(out, tuple(tensors), backward, "concat")


def stack(tensors: Sequence[Tensor], axis: int = 1) -> Tensor:
    """Stack equal-shaped tensors along a new axis (time, for the BiLSTM)."""
    if not tensors:
        raise ShapeError("stack: nothing to stack")
    shapes = {t.shape for t in tensors}
    if len(shapes) != 1:
        raise ShapeError(f"stack: shapes differ {sorted(shapes)}")
    out = np.stack([t.data for t in tensors], axis=axis)

    def backward(g: np.ndarray) -> None:
        for i, t in enumerate(tensors):
            if t.requires_grad:
                t._accumulate(np.take(g, i, axis=axis))

    return _result(out, tuple(tensors), backward, "stack")


def time_step(x: Tensor, t: int) -> Tensor:
    """x[:, t, :] for a [batch x T x d] tensor."""
    out = x.data[:, t, :]

    def backward(g: np.ndarray) -> None:
        x._accumulate(g, index=(slice(None), t))

    return _result(out, (x,), backward, "time_step")


def embedding(table: Tensor, ids: np.ndarray) -> Tensor:
    """Row lookup: table[ids]. Repeated ids sum their gradients."""
    ids = np.asarray(ids, dtype=np.int64)
    if table.data.ndim != 2:
        raise ShapeError(f"embedding: table must be 2-D, got {table.shape}")
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise ShapeError(f"embedding: ids outside [0, {table.shape[0]})")

    def backward(g: np.ndarray) -> None:
        if table.grad is None:
            table.grad = np.zeros_like(table.data)
        np.add.at(table.grad, ids.reshape(-1), g.reshape(-1, table.shape[1]))

    return _result(table.data[ids], (table,), backward, "embedding")


# ----------------------------------------------------------------------
# pooling over time
# ----------------------------------------------------------------------

def _valid_lengths(h: Tensor, lengths) -> np.ndarray:
    lengths = np.asarray(lengths, dtype=np.int64).reshape(-1)
    if h.data.ndim != 3 or lengths.shape[0] != h.shape[0]:
        raise ShapeError(f"pooling: expected [batch x T x d] with {h.shape[0]} lengths, got {h.shape} and {lengths.shape[0]}")
    if lengths.size and (lengths.min() < 1 or lengths.max() > h.shape[1]):
        raise ValueError(f"pooling: valid lengths must lie in [1, {h.shape[1]}], got {lengths.tolist()}")
    return lengths


def _time_mask(lengths: np.ndarray, steps: int) -> np.ndarray:
    return np.arange(steps)[None, :] < lengths[:, None]


def masked_max_pool(h: Tensor, lengths) -> Tensor:
    """
    Per-dimension max over the first `length` steps of each sequence.

    Accepts [batch x T x d] with one length per row, or a single [T x d]
    sequence with an integer length. Padded steps never win; on ties the
    earliest step gets the gradient.
    """
    if h.data.ndim == 2:
        single = reshape(h, (1,) + h.shape)
        pooled = masked_max_pool(single, [int(lengths)])
        return reshape(pooled, (h.shape[1],))

    lengths = _valid_lengths(h, lengths)
    mask = _time_mask(lengths, h.shape[1])[:, :, None]
    masked = np.where(mask, h.data, -np.inf)
    winners = np.argmax(masked, axis=1)  # first index on ties
    out = np.take_along_axis(h.data, winners[:, None, :], axis=1)[:, 0, :]

    def backward(g: np.ndarray) -> None:
        if h.grad is None:
            h.grad = np.zeros_like(h.data)
        rows = np.arange(h.shape[0])[:, None]
        cols = np.arange(h.shape[2])[None, :]
        h.grad[rows, winners, cols] += g

    return _result(np.ascontiguousarray(out), (h,), backward, "masked_max_pool")


def masked_mean_pool(h: Tensor, lengths) -> Tensor:
    """Mean over the valid steps of each sequence."""
    lengths = _valid_lengths(h, lengths)
    mask = _time_mask(lengths, h.shape[1])[:, :, None].astype(h.dtype)
    denom = lengths.astype(h.dtype)[:, None]
    out = (np.where(mask > 0, h.data, 0).sum(axis=1) / denom).astype(h.dtype, copy=False)

    def backward(g: np.ndarray) -> None:
        h._accumulate((g / denom)[:, None, :] * mask)

    return _result(out, (h,), backward, "masked_mean_pool")


def last_valid(h: Tensor, lengths) -> Tensor:
    """The state at step length-1 of each sequence."""
    lengths = _valid_lengths(h, lengths)
    rows = np.arange(h.shape[0])
    out = h.data[rows, lengths - 1, :]

    def backward(g: np.ndarray) -> None:
        if h.grad is None:
            h.grad = np.zeros_like(h.data)
        h.grad[rows, lengths - 1, :] += g

    return _result(out, (h,), backward, "last_valid")


# ----------------------------------------------------------------------
# regularization and loss
# ----------------------------------------------------------------------

def dropout(x: Tensor, p: float, train: bool, rng: Optional[np.random.Generator]) -> Tensor:
    """
    Inverted dropout: zero with probability p, scale survivors by 1/(1-p).

    Identity in eval mode and when p == 0.
    """
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout probability must be in [0, 1), got {p}")
    if not train or p == 0.0:
        return x
    if rng is None:
        raise ValueError("dropout in train mode needs an rng")
    keep = (rng.random(x.shape) >= p).astype(x.dtype) / x.dtype.type(1.0 - p)

    def backward(g: np.ndarray) -> None:
        x._accumulate(g * keep)

    return _result(x.data * keep, (x,), backward, "dropout")


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row softmax on a plain array, max-subtracted."""
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exps = np.exp(shifted)
    return exps / exps.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits: Tensor, targets) -> Tensor:
    """
    Mean over the batch of -log softmax(logits)[target].

    Gradient is (softmax - onehot) / batch.
    """
    targets = np.asarray(targets, dtype=np.int64).reshape(-1)
    if logits.data.ndim != 2 or logits.shape[0] != targets.shape[0]:
        raise ShapeError(f"softmax_cross_entropy: logits {logits.shape} vs {targets.shape[0]} targets")
    classes = logits.shape[1]
    if targets.size and (targets.min() < 0 or targets.max() >= classes):
        raise ValueError(f"targets must lie in [0, {classes}), got {sorted(set(targets.tolist()))}")

    batch = logits.shape[0]
    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    rows = np.arange(batch)
    loss = np.asarray((log_norm - shifted[rows, targets]).mean(), dtype=logits.dtype)

    def backward(g: np.ndarray) -> None:
        probs = np.exp(shifted - log_norm[:, None])
        probs[rows, targets] -= 1.0
        logits._accumulate((g * probs / batch).astype(logits.dtype, copy=False))

    return _result(loss, (logits,), backward, "softmax_cross_entropy")
