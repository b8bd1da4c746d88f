"""Reverse-mode automatic differentiation over dense float64 arrays.

Each :class:`Tensor` produced by an operation remembers its parents and a
closure that pushes the output gradient back to them. Calling
:meth:`Tensor.backward` records the reachable graph in topological order
(the tape) and replays it in reverse.
"""
from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

CE_EPS = 1e-12


def _as_array(x) -> np.ndarray:
    return np.array(x, dtype=np.float64, copy=True) if not isinstance(x, np.ndarray) \
        else x.astype(np.float64, copy=False)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` (inverse of numpy broadcasting)."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = _as_array(data)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], None] | None = None
        self.name = name

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def __repr__(self) -> str:
        tag = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{tag})"

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise ValueError("item() needs a single-element tensor")
        return float(self.data.reshape(-1)[0])

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64, copy=True)
        else:
            self.grad += g

    def backward(self, grad: np.ndarray | None = None) -> None:
        if grad is None:
            if self.data.size != 1:
                raise ValueError("backward() without a seed gradient needs a scalar output")
            grad = np.ones_like(self.data)
        tape = build_tape(self)
        self._accumulate(np.asarray(grad, dtype=np.float64).reshape(self.shape))
        for node in reversed(tape):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(_wrap(other)))

    def __rsub__(self, other):
        return add(_wrap(other), neg(self))

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, float(other))
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return getitem(self, index)


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def build_tape(root: Tensor) -> list[Tensor]:
    """Nodes reachable from ``root`` in topological order (inputs first)."""
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
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def _result(data: np.ndarray, parents: Sequence[Tensor], backward) -> Tensor:
    out = Tensor(data)
    live = tuple(p for p in parents if p.requires_grad)
    if live:
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


# ---------------------------------------------------------------- elementwise

def add(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g, b.shape))

    return _result(a.data + b.data, (a, b), backward)


def neg(a: Tensor) -> Tensor:
    return scale(a, -1.0)


def mul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g * b.data, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g * a.data, b.shape))

    return _result(a.data * b.data, (a, b), backward)


def div(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    out = a.data / b.data

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g / b.data, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(-g * out / b.data, b.shape))

    return _result(out, (a, b), backward)


def scale(a: Tensor, c: float) -> Tensor:
    def backward(g):
        a._accumulate(g * c)

    return _result(a.data * c, (a,), backward)


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0

    def backward(g):
        a._accumulate(g * mask)

    return _result(np.where(mask, a.data, 0.0), (a,), backward)


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.data)

    def backward(g):
        a._accumulate(g * (1.0 - y * y))

    return _result(y, (a,), backward)


def exp(a: Tensor) -> Tensor:
    y = np.exp(a.data)

    def backward(g):
        a._accumulate(g * y)

    return _result(y, (a,), backward)


def log(a: Tensor, eps: float = 0.0) -> Tensor:
    """Natural log; with ``eps > 0`` the input is clamped from below first."""
    x = np.maximum(a.data, eps) if eps > 0 else a.data

    def backward(g):
        d = g / x
        if eps > 0:
            d = np.where(a.data >= eps, d, 0.0)
        a._accumulate(d)

    return _result(np.log(x), (a,), backward)


# ---------------------------------------------------------------- linear algebra

def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError(f"matmul expects 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul shape mismatch: {a.shape} @ {b.shape}")

    def backward(g):
        if a.requires_grad:
            a._accumulate(g @ b.data.T)
        if b.requires_grad:
            b._accumulate(a.data.T @ g)

    return _result(a.data @ b.data, (a, b), backward)


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    def backward(g):
        a._accumulate(g.reshape(a.shape))

    return _result(a.data.reshape(shape), (a,), backward)


def transpose(a: Tensor, axes: Sequence[int] | None = None) -> Tensor:
    axes = tuple(reversed(range(a.ndim))) if axes is None else tuple(axes)
    inverse = tuple(np.argsort(axes))

    def backward(g):
        a._accumulate(g.transpose(inverse))

    return _result(a.data.transpose(axes), (a,), backward)


def concat(tensors: Iterable[Tensor], axis: int = -1) -> Tensor:
    parts = [_wrap(t) for t in tensors]
    if not parts:
        raise ValueError("concat of an empty list")
    ax = axis % parts[0].ndim
    sizes = [p.shape[ax] for p in parts]
    try:
        data = np.concatenate([p.data for p in parts], axis=ax)
    except ValueError as exc:
        raise ValueError(f"concat shape mismatch: {[p.shape for p in parts]}") from exc
    bounds = np.cumsum([0] + sizes)

    def backward(g):
        for p, lo, hi in zip(parts, bounds[:-1], bounds[1:]):
            if p.requires_grad:
                idx = [slice(None)] * g.ndim
                idx[ax] = slice(lo, hi)
                p._accumulate(g[tuple(idx)])

    return _result(data, parts, backward)


def getitem(a: Tensor, index) -> Tensor:
    """Basic or integer-array indexing (row selection, slicing)."""

    def backward(g):
        full = np.zeros_like(a.data)
        np.add.at(full, index, g)
        a._accumulate(full)

    return _result(a.data[index], (a,), backward)


def gather(a: Tensor, index) -> Tensor:
    """Pick ``a[i, index[i]]`` for every row ``i``; result has shape (n,)."""
    index = np.asarray(index, dtype=np.int64)
    if a.ndim != 2 or index.shape != (a.shape[0],):
        raise ValueError(f"gather expects (n, c) and (n,), got {a.shape} and {index.shape}")
    rows = np.arange(a.shape[0])
    return getitem(a, (rows, index))


# ---------------------------------------------------------------- reductions

def sum(a: Tensor, axis: int | None = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        a._accumulate(np.broadcast_to(g, a.shape))

    return _result(np.sum(a.data, axis=axis, keepdims=keepdims), (a,), backward)


def mean(a: Tensor, axis: int | None = None, keepdims: bool = False) -> Tensor:
    n = a.data.size if axis is None else a.shape[axis]
    return scale(sum(a, axis=axis, keepdims=keepdims), 1.0 / n)


# ---------------------------------------------------------------- probabilistic heads

def softmax_t(x: Tensor, tau: float = 1.0) -> Tensor:
    """Softmax over the last axis of ``x / tau``."""
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"temperature must lie in (0, 1], got {tau}")
    z = x.data / tau
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=-1, keepdims=True)

    def backward(g):
        dot = (g * y).sum(axis=-1, keepdims=True)
        x._accumulate(y * (g - dot) / tau)

    return _result(y, (x,), backward)


def log_softmax(x: Tensor) -> Tensor:
    z = x.data - x.data.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=-1, keepdims=True))
    y = z - lse
    p = np.exp(y)

    def backward(g):
        x._accumulate(g - p * g.sum(axis=-1, keepdims=True))

    return _result(y, (x,), backward)


def cross_entropy(x: Tensor, targets, mode: str = "probs", weights=None) -> Tensor:
    """Mean negative log-likelihood of ``targets`` under the rows of ``x``.

    ``mode="probs"`` reads rows as probabilities (clamped at 1e-12);
    ``mode="logits"`` applies a log-softmax first. Optional per-row
    ``weights`` turn the mean into a weighted mean (used to mask padding).
    """
    targets = np.asarray(targets, dtype=np.int64)
    if x.ndim != 2:
        raise ValueError(f"cross_entropy expects (n, c) input, got {x.shape}")
    n, c = x.shape
    if n == 0:
        raise ValueError("cross_entropy of an empty batch")
    if targets.shape != (n,):
        raise ValueError(f"targets shape {targets.shape} does not match batch {n}")
    if targets.min() < 0 or targets.max() >= c:
        raise ValueError(f"targets must lie in [0, {c})")
    if mode == "probs":
        logp = log(gather(x, targets), eps=CE_EPS)
    elif mode == "logits":
        logp = gather(log_softmax(x), targets)
    else:
        raise ValueError(f"unknown cross_entropy mode {mode!r}")
    if weights is None:
        return neg(mean(logp))
    w = np.asarray(weights, dtype=np.float64)
    total = float(w.sum())
    if total <= 0:
        raise ValueError("cross_entropy weights sum to zero")
    return scale(sum(mul(logp, Tensor(w))), -1.0 / total)


def zero_grads(params: Iterable[Tensor]) -> None:
    for p in params:
        p.grad = None
