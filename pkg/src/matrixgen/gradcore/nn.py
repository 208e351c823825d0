"""Parameter containers and recurrent cells built on the tape ops."""

from __future__ import annotations

from typing import Iterator

import numpy as np

from .tensor import ShapeError, Tensor, matmul, sigmoid, tanh


class Module:
    """Tracks parameters and sub-modules in declaration order."""

    def __init__(self):
        object.__setattr__(self, "_children", {})

    def __setattr__(self, name, value):
        if isinstance(value, Module) or (isinstance(value, Tensor) and value.requires_grad):
            self._children[name] = value
        object.__setattr__(self, name, value)

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        for name, child in self._children.items():
            full = f"{prefix}{name}"
            if isinstance(child, Module):
                yield from child.named_parameters(full + ".")
            else:
                yield full, child

    def parameters(self) -> list[Tensor]:
        return [p for _, p in self.named_parameters()]

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def astype(self, dtype) -> "Module":
        for p in self.parameters():
            p.data = p.data.astype(dtype)
            p.zero_grad()
        return self

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        params = dict(self.named_parameters())
        if set(params) != set(state):
            missing = sorted(set(params) ^ set(state))
            raise KeyError(f"parameter names differ: {missing}")
        for name, p in params.items():
            if state[name].shape != p.shape:
                raise ShapeError(f"{name}: expected {p.shape}, got {state[name].shape}")
            p.data = np.array(state[name], dtype=p.data.dtype)


def uniform_weight(rng: np.random.Generator, fan_in: int, fan_out: int, name: str) -> Tensor:
    bound = 1.0 / np.sqrt(fan_in)
    return Tensor(rng.uniform(-bound, bound, size=(fan_in, fan_out)), requires_grad=True, name=name)


def zero_bias(size: int, name: str) -> Tensor:
    return Tensor(np.zeros((1, size)), requires_grad=True, name=name)


class Linear(Module):
    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator):
        super().__init__()
        self.in_dim, self.out_dim = in_dim, out_dim
        self.weight = uniform_weight(rng, in_dim, out_dim, "weight")
        self.bias = zero_bias(out_dim, "bias")

    def __call__(self, x: Tensor) -> Tensor:
        return matmul(x, self.weight) + self.bias


class LSTMCell(Module):
    """Gate layout along columns: input, forget, candidate, output."""

    def __init__(self, in_dim: int, hidden: int, rng: np.random.Generator):
        super().__init__()
        self.in_dim, self.hidden = in_dim, hidden
        self.w_x = uniform_weight(rng, in_dim, 4 * hidden, "w_x")
        self.w_h = uniform_weight(rng, hidden, 4 * hidden, "w_h")
        self.bias = zero_bias(4 * hidden, "bias")

    def __call__(self, x: Tensor, h: Tensor, c: Tensor) -> tuple[Tensor, Tensor]:
        return lstm_cell_step(x, h, c, self)


class GRUCell(Module):
    """Gate layout along columns: reset, update, candidate."""

    def __init__(self, in_dim: int, hidden: int, rng: np.random.Generator):
        super().__init__()
        self.in_dim, self.hidden = in_dim, hidden
        self.w_x = uniform_weight(rng, in_dim, 3 * hidden, "w_x")
        self.w_h = uniform_weight(rng, hidden, 3 * hidden, "w_h")
        self.b_x = zero_bias(3 * hidden, "b_x")
        self.b_h = zero_bias(3 * hidden, "b_h")

    def __call__(self, x: Tensor, h: Tensor) -> Tensor:
        return gru_cell_step(x, h, self)


def _check_cell_dims(kind: str, x: Tensor, h: Tensor, in_dim: int, hidden: int) -> None:
    if x.shape[1] != in_dim:
        raise ShapeError(f"{kind}: input width {x.shape[1]} != {in_dim}")
    if h.shape[1] != hidden or h.shape[0] != x.shape[0]:
        raise ShapeError(f"{kind}: hidden shape {h.shape} incompatible with input {x.shape}")


def lstm_cell_step(x: Tensor, h: Tensor, c: Tensor, cell: LSTMCell) -> tuple[Tensor, Tensor]:
    n = cell.hidden
    _check_cell_dims("lstm", x, h, cell.in_dim, n)
    if c.shape != h.shape:
        raise ShapeError(f"lstm: cell state {c.shape} != hidden {h.shape}")
    z = matmul(x, cell.w_x) + matmul(h, cell.w_h) + cell.bias
    i = sigmoid(z[:, 0:n])
    f = sigmoid(z[:, n:2 * n])
    g = tanh(z[:, 2 * n:3 * n])
    o = sigmoid(z[:, 3 * n:4 * n])
    c_next = f * c + i * g
    return o * tanh(c_next), c_next


def gru_cell_step(x: Tensor, h: Tensor, cell: GRUCell) -> Tensor:
    n = cell.hidden
    _check_cell_dims("gru", x, h, cell.in_dim, n)
    gx = matmul(x, cell.w_x) + cell.b_x
    gh = matmul(h, cell.w_h) + cell.b_h
    r = sigmoid(gx[:, 0:n] + gh[:, 0:n])
    u = sigmoid(gx[:, n:2 * n] + gh[:, n:2 * n])
    cand = tanh(gx[:, 2 * n:3 * n] + r * gh[:, 2 * n:3 * n])
    # u -> 1 keeps the previous state
    return cand + u * (h - cand)
