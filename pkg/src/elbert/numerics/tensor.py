"""Reverse-mode automatic differentiation over float64 numpy arrays.

Each operation returns a new :class:`Tensor` that remembers its parents and a
closure propagating the output gradient back to them.  :func:`backward` walks
the recorded graph in reverse topological order.
"""
from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np


class NonFiniteError(FloatingPointError):
    """Raised when an operation produces NaN or Inf."""


class ShapeError(ValueError):
    pass


def _as_array(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    # sum out the axes numpy broadcasting introduced
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "parents", "backward_fn", "op", "requires_grad", "name")

    def __init__(self, data, requires_grad: bool = False, name: str = ""):
        self.data = _as_array(data)
        if not np.all(np.isfinite(self.data)):
            raise NonFiniteError(f"non-finite values in tensor {name or '<leaf>'}")
        self.grad: np.ndarray | None = None
        self.parents: tuple[Tensor, ...] = ()
        self.backward_fn: Callable[[np.ndarray], None] | None = None
        self.op = "leaf"
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def __repr__(self) -> str:
        return f"Tensor(op={self.op}, shape={self.shape})"

    # arithmetic sugar
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(_lift(other), self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def sum(self, axis=None):
        return tsum(self, axis)

    def mean(self, axis=None):
        return mean(self, axis)


def _lift(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _node(data: np.ndarray, parents: Sequence[Tensor], op: str,
          backward_fn: Callable[[np.ndarray], Sequence[np.ndarray | None]]) -> Tensor:
    if not np.all(np.isfinite(data)):
        raise NonFiniteError(f"operation '{op}' produced non-finite values")
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out.parents = tuple(parents)
    out.op = op
    out.name = ""
    out.requires_grad = any(p.requires_grad for p in parents)
    out.backward_fn = backward_fn
    return out


def add(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)
    return _node(a.data + b.data, (a, b), "add",
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)
    return _node(a.data - b.data, (a, b), "sub",
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))


def mul(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)
    return _node(a.data * b.data, (a, b), "mul",
                 lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)))


def neg(a: Tensor) -> Tensor:
    return _node(-a.data, (a,), "neg", lambda g: (-g,))


def square(a: Tensor) -> Tensor:
    return _node(a.data * a.data, (a,), "square", lambda g: (2.0 * a.data * g,))


def matmul(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ShapeError(f"matmul expects 2-d operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul shape mismatch {a.shape} @ {b.shape}")
    return _node(a.data @ b.data, (a, b), "matmul",
                 lambda g: (g @ b.data.T, a.data.T @ g))


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.data)
    return _node(y, (a,), "tanh", lambda g: ((1.0 - y * y) * g,))


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0
    return _node(np.where(mask, a.data, 0.0), (a,), "relu", lambda g: (g * mask,))


def exp(a: Tensor) -> Tensor:
    with np.errstate(over="ignore"):
        y = np.exp(a.data)
    return _node(y, (a,), "exp", lambda g: (g * y,))


def log(a: Tensor) -> Tensor:
    if np.any(a.data <= 0):
        raise NonFiniteError("log of non-positive value")
    return _node(np.log(a.data), (a,), "log", lambda g: (g / a.data,))


def log_softmax(a: Tensor) -> Tensor:
    """Log-softmax along the last axis."""
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    y = shifted - lse
    p = np.exp(y)
    return _node(y, (a,), "log_softmax",
                 lambda g: (g - p * g.sum(axis=-1, keepdims=True),))


def gather(a: Tensor, index) -> Tensor:
    """Pick ``a[i, index[i]]`` for every row ``i`` of a 2-d tensor."""
    index = np.asarray(index, dtype=np.int64)
    if a.data.ndim != 2 or index.shape != (a.shape[0],):
        raise ShapeError(f"gather expects [n, k] data and [n] index, got {a.shape}, {index.shape}")
    rows = np.arange(a.shape[0])

    def back(g):
        out = np.zeros_like(a.data)
        out[rows, index] = g
        return (out,)

    return _node(a.data[rows, index], (a,), "gather", back)


def tsum(a: Tensor, axis=None) -> Tensor:
    def back(g):
        if axis is None:
            return (np.broadcast_to(g, a.shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis), a.shape).copy(),)

    return _node(np.asarray(a.data.sum(axis=axis)), (a,), "sum", back)


def mean(a: Tensor, axis=None) -> Tensor:
    n = a.size if axis is None else a.shape[axis]
    return mul(tsum(a, axis), 1.0 / n)


def clip(a: Tensor, lo: float, hi: float) -> Tensor:
    inside = (a.data >= lo) & (a.data <= hi)
    return _node(np.clip(a.data, lo, hi), (a,), "clip", lambda g: (g * inside,))


def minimum(a, b) -> Tensor:
    """Elementwise minimum; ties send the gradient to ``a``."""
    a, b = _lift(a), _lift(b)
    pick_a = a.data <= b.data
    return _node(np.minimum(a.data, b.data), (a, b), "min",
                 lambda g: (_unbroadcast(g * pick_a, a.shape),
                            _unbroadcast(g * ~pick_a, b.shape)))


def topological_order(root: Tensor) -> list[Tensor]:
    """Nodes reachable from ``root``, every parent before its children."""
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def backward(root: Tensor, params: Iterable[Tensor] = ()) -> list[np.ndarray]:
    """Populate ``.grad`` on every node reachable from a scalar ``root``.

    Returns the gradients of ``params`` in order; parameters the root does not
    depend on get a zero gradient of matching shape.
    """
    if root.size != 1 or root.data.ndim > 1:
        raise ShapeError(f"backward needs a scalar root, got shape {root.shape}")
    order = topological_order(root)
    for node in order:
        node.grad = None
    root.grad = np.ones_like(root.data)
    for node in reversed(order):
        if node.backward_fn is None or node.grad is None:
            continue
        for parent, g in zip(node.parents, node.backward_fn(node.grad)):
            if g is None or not parent.requires_grad:
                continue
            parent.grad = g if parent.grad is None else parent.grad + g
    reached = {id(n) for n in order}
    out = []
    for p in params:
        if id(p) not in reached or p.grad is None:
            p.grad = np.zeros_like(p.data)
        out.append(p.grad)
    return out
