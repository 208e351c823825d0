"""Dense 2-D tensors with a define-by-run reverse-mode tape.

Every differentiable operation computes its forward value eagerly with numpy
and, when a :class:`Tape` is active and an input requires grad, appends a
record whose backward rule is looked up by op kind in ``BACKWARD_RULES``.
Keeping the rules in a registry lets tests corrupt one deliberately and
confirm that the finite-difference oracle notices.
"""

from __future__ import annotations

import contextlib
import itertools
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

_node_ids = itertools.count()
_default_dtype = np.dtype(np.float32)
_tape_stack: list["Tape"] = []


class ShapeError(ValueError):
    pass


class NonFiniteError(FloatingPointError):
    pass


def get_default_dtype() -> np.dtype:
    return _default_dtype


@contextlib.contextmanager
def precision(dtype):
    """Temporarily switch the dtype used for new tensors and constants."""
    global _default_dtype
    previous = _default_dtype
    _default_dtype = np.dtype(dtype)
    try:
        yield
    finally:
        _default_dtype = previous


def _as_2d(data, dtype=None) -> np.ndarray:
    arr = np.array(data, dtype=dtype or _default_dtype, copy=True)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1)
    elif arr.ndim != 2:
        raise ShapeError(f"tensors are 2-D, got shape {arr.shape}")
    return arr


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "name", "node_id", "is_leaf")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None, dtype=None):
        self.data = _as_2d(data, dtype)
        if not np.all(np.isfinite(self.data)):
            raise NonFiniteError(f"non-finite values in tensor {name or ''}".strip())
        self.requires_grad = requires_grad
        self.grad = np.zeros_like(self.data) if requires_grad else None
        self.name = name
        self.node_id = next(_node_ids)
        self.is_leaf = True

    @classmethod
    def _from_op(cls, data: np.ndarray) -> "Tensor":
        t = object.__new__(cls)
        t.data = data
        t.grad = None
        t.requires_grad = False
        t.name = None
        t.node_id = next(_node_ids)
        t.is_leaf = False
        return t

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a 1x1 tensor, got {self.shape}")
        return float(self.data[0, 0])

    def zero_grad(self) -> None:
        if self.requires_grad:
            self.grad = np.zeros_like(self.data)

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{tag}, requires_grad={self.requires_grad})"

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __getitem__(self, key):
        return slice_(self, key)


@dataclass
class Record:
    kind: str
    inputs: tuple[Tensor, ...]
    output: Tensor
    ctx: Any


class Tape:
    """Ordered list of recorded operations for one forward pass."""

    def __init__(self):
        self.records: list[Record] = []

    def __enter__(self) -> "Tape":
        _tape_stack.append(self)
        return self

    def __exit__(self, *exc) -> None:
        _tape_stack.remove(self)

    def __len__(self) -> int:
        return len(self.records)


def current_tape() -> Tape | None:
    return _tape_stack[-1] if _tape_stack else None


@contextlib.contextmanager
def no_grad():
    saved = list(_tape_stack)
    _tape_stack.clear()
    try:
        yield
    finally:
        _tape_stack[:] = saved


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _record(kind: str, inputs: Sequence[Tensor], out: np.ndarray, ctx=None) -> Tensor:
    if not np.all(np.isfinite(out)):
        raise NonFiniteError(f"{kind}: non-finite output")
    result = Tensor._from_op(out)
    tape = current_tape()
    if tape is not None and any(t.requires_grad for t in inputs):
        result.requires_grad = True
        tape.records.append(Record(kind, tuple(inputs), result, ctx))
    return result


def _unbroadcast(g: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    if g.shape == shape:
        return g
    axes = tuple(i for i in range(2) if shape[i] == 1 and g.shape[i] != 1)
    return g.sum(axis=axes, keepdims=True)


def _check_elementwise(kind: str, a: Tensor, b: Tensor) -> None:
    for sa, sb in zip(a.shape, b.shape):
        if sa != sb and sa != 1 and sb != 1:
            raise ShapeError(f"{kind}: incompatible shapes {a.shape} and {b.shape}")


# ---------------------------------------------------------------------------
# forward ops


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_elementwise("add", a, b)
    return _record("add", (a, b), a.data + b.data)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_elementwise("sub", a, b)
    return _record("sub", (a, b), a.data - b.data)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_elementwise("mul", a, b)
    return _record("mul", (a, b), a.data * b.data)


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_elementwise("div", a, b)
    return _record("div", (a, b), a.data / b.data)


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: inner dimensions differ for {a.shape} and {b.shape}")
    return _record("matmul", (a, b), a.data @ b.data)


def concat(tensors: Sequence, axis: int = 1) -> Tensor:
    ts = [as_tensor(t) for t in tensors]
    other = 1 - axis
    if len({t.shape[other] for t in ts}) != 1:
        raise ShapeError(f"concat: mismatched shapes {[t.shape for t in ts]}")
    sizes = [t.shape[axis] for t in ts]
    return _record("concat", ts, np.concatenate([t.data for t in ts], axis=axis), (axis, sizes))


def slice_(a: Tensor, key) -> Tensor:
    if not isinstance(key, tuple):
        key = (key, slice(None))
    rows, cols = key
    # integer indices would drop a dimension
    rows = slice(rows, rows + 1) if isinstance(rows, (int, np.integer)) else rows
    cols = slice(cols, cols + 1) if isinstance(cols, (int, np.integer)) else cols
    if not isinstance(rows, slice) and not isinstance(cols, slice):
        raise ShapeError("slice: at most one axis may use index arrays")
    out = a.data[rows, cols]
    return _record("slice", (a,), np.ascontiguousarray(out), (rows, cols))


def take_cols(a: Tensor, index) -> Tensor:
    return slice_(a, (slice(None), np.asarray(index, dtype=np.intp)))


def tanh(a) -> Tensor:
    a = as_tensor(a)
    return _record("tanh", (a,), np.tanh(a.data))


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    x = a.data
    # split by sign so exp never overflows
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return _record("sigmoid", (a,), out)


def exp(a) -> Tensor:
    a = as_tensor(a)
    with np.errstate(over="ignore"):
        return _record("exp", (a,), np.exp(a.data))


def log(a) -> Tensor:
    a = as_tensor(a)
    with np.errstate(divide="ignore", invalid="ignore"):
        return _record("log", (a,), np.log(a.data))


def sqrt(a) -> Tensor:
    a = as_tensor(a)
    with np.errstate(invalid="ignore"):
        return _record("sqrt", (a,), np.sqrt(a.data))


def square(a) -> Tensor:
    a = as_tensor(a)
    return _record("square", (a,), a.data * a.data)


def relu(a) -> Tensor:
    a = as_tensor(a)
    return _record("relu", (a,), np.maximum(a.data, 0.0))


def huber(a, delta: float = 1.0) -> Tensor:
    """Elementwise Huber penalty: quadratic inside ``delta``, linear outside."""
    a = as_tensor(a)
    x = a.data
    ax = np.abs(x)
    out = np.where(ax <= delta, 0.5 * x * x, delta * (ax - 0.5 * delta)).astype(x.dtype)
    return _record("huber", (a,), out, delta)


def softmax(a) -> Tensor:
    a = as_tensor(a)
    z = a.data - a.data.max(axis=1, keepdims=True)
    e = np.exp(z)
    return _record("softmax", (a,), e / e.sum(axis=1, keepdims=True))


def logsumexp(a) -> Tensor:
    """Row-wise log-sum-exp, shape (n, 1)."""
    a = as_tensor(a)
    m = a.data.max(axis=1, keepdims=True)
    s = np.exp(a.data - m).sum(axis=1, keepdims=True)
    return _record("logsumexp", (a,), m + np.log(s))


def sum_(a, axis: int | None = None) -> Tensor:
    a = as_tensor(a)
    acc = np.sum(a.data, axis=axis, dtype=np.float64, keepdims=True)
    return _record("sum", (a,), _as_2d(acc, a.data.dtype), axis)


def mean(a) -> Tensor:
    a = as_tensor(a)
    return sum_(a) * (1.0 / a.data.size)


# ---------------------------------------------------------------------------
# backward rules: (ctx, inputs, output, upstream grad) -> grads per input


def _bw_add(ctx, ins, out, g):
    return _unbroadcast(g, ins[0].shape), _unbroadcast(g, ins[1].shape)


def _bw_sub(ctx, ins, out, g):
    return _unbroadcast(g, ins[0].shape), _unbroadcast(-g, ins[1].shape)


def _bw_mul(ctx, ins, out, g):
    a, b = ins
    return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)


def _bw_div(ctx, ins, out, g):
    a, b = ins
    ga = g / b.data
    return _unbroadcast(ga, a.shape), _unbroadcast(-ga * out.data, b.shape)


def _bw_matmul(ctx, ins, out, g):
    a, b = ins
    return g @ b.data.T, a.data.T @ g


def _bw_concat(ctx, ins, out, g):
    axis, sizes = ctx
    bounds = np.cumsum([0] + sizes)
    if axis == 1:
        return tuple(g[:, bounds[i]:bounds[i + 1]] for i in range(len(sizes)))
    return tuple(g[bounds[i]:bounds[i + 1], :] for i in range(len(sizes)))


def _bw_slice(ctx, ins, out, g):
    rows, cols = ctx
    full = np.zeros_like(ins[0].data)
    # np.add.at handles repeated indices
    if isinstance(rows, slice) and isinstance(cols, slice):
        full[rows, cols] += g
    else:
        np.add.at(full, (rows, cols), g)
    return (full,)


def _bw_tanh(ctx, ins, out, g):
    return (g * (1.0 - out.data * out.data),)


def _bw_sigmoid(ctx, ins, out, g):
    return (g * out.data * (1.0 - out.data),)


def _bw_exp(ctx, ins, out, g):
    return (g * out.data,)


def _bw_log(ctx, ins, out, g):
    return (g / ins[0].data,)


def _bw_sqrt(ctx, ins, out, g):
    # subgradient 0 at sqrt(0)
    y = out.data
    safe = np.where(y > 0, y, 1.0)
    return (np.where(y > 0, g / (2.0 * safe), 0.0).astype(g.dtype),)


def _bw_square(ctx, ins, out, g):
    return (2.0 * g * ins[0].data,)


def _bw_relu(ctx, ins, out, g):
    return (g * (ins[0].data > 0),)


def _bw_huber(ctx, ins, out, g):
    delta = ctx
    return (g * np.clip(ins[0].data, -delta, delta),)


def _bw_softmax(ctx, ins, out, g):
    s = out.data
    return (s * (g - (g * s).sum(axis=1, keepdims=True)),)


def _bw_logsumexp(ctx, ins, out, g):
    return (g * np.exp(ins[0].data - out.data),)


def _bw_sum(ctx, ins, out, g):
    return (np.broadcast_to(g, ins[0].shape).astype(ins[0].data.dtype),)


BACKWARD_RULES: dict[str, Callable] = {
    "add": _bw_add,
    "sub": _bw_sub,
    "mul": _bw_mul,
    "div": _bw_div,
    "matmul": _bw_matmul,
    "concat": _bw_concat,
    "slice": _bw_slice,
    "tanh": _bw_tanh,
    "sigmoid": _bw_sigmoid,
    "exp": _bw_exp,
    "log": _bw_log,
    "sqrt": _bw_sqrt,
    "square": _bw_square,
    "relu": _bw_relu,
    "huber": _bw_huber,
    "softmax": _bw_softmax,
    "logsumexp": _bw_logsumexp,
    "sum": _bw_sum,
}


def backward(loss: Tensor, tape: Tape | None = None) -> None:
    """Accumulate d(loss)/d(leaf) into ``.grad`` of every requires-grad leaf on the tape.

    Intermediate gradients live only for the duration of the call, so calling
    twice without zeroing leaf grads accumulates exactly twice the gradient.
    """
    tape = tape or current_tape()
    if tape is None:
        raise RuntimeError("backward needs a tape")
    if loss.shape != (1, 1):
        raise ShapeError(f"backward: loss must be 1x1, got {loss.shape}")
    grads: dict[int, np.ndarray] = {loss.node_id: np.ones_like(loss.data)}
    for rec in reversed(tape.records):
        g = grads.pop(rec.output.node_id, None)
        if g is None:
            continue
        in_grads = BACKWARD_RULES[rec.kind](rec.ctx, rec.inputs, rec.output, g)
        for t, gi in zip(rec.inputs, in_grads):
            if not t.requires_grad or gi is None:
                continue
            if not np.all(np.isfinite(gi)):
                raise NonFiniteError(f"{rec.kind}: non-finite gradient")
            if t.is_leaf:
                if t.grad is None:
                    t.grad = np.zeros_like(t.data)
                t.grad += gi
            elif t.node_id in grads:
                grads[t.node_id] = grads[t.node_id] + gi
            else:
                grads[t.node_id] = gi
