"""Autoregressive GRU decoder that emits per-step displacements."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gradcore import GRUCell, Linear, Module, Tensor, concat, huber, sum_
from .gradcore.tensor import as_tensor


class Decoder(Module):
    def __init__(self, context_dim: int, hidden: int, rng: np.random.Generator, init_from_context: bool = True):
        super().__init__()
        self.hidden = hidden
        self.init_from_context = init_from_context
        if init_from_context:
            self.init = Linear(context_dim, hidden, rng)
        self.gru = GRUCell(context_dim + 4, hidden, rng)
        self.residual = Linear(hidden, 2, rng)


@dataclass
class Rollout:
    positions: list[Tensor]   # F tensors of (N, 2), agent frame
    residuals: list[Tensor]

    def positions_array(self) -> np.ndarray:
        """(N, F, 2) copy of the predicted positions."""
        return np.stack([p.data for p in self.positions], axis=1).astype(np.float64)

    def residuals_array(self) -> np.ndarray:
        return np.stack([r.data for r in self.residuals], axis=1).astype(np.float64)


def rollout(e: Tensor, d, dec: Decoder, f: int) -> Rollout:
    """Roll the decoder ``f`` steps from each agent's origin toward destination ``d`` (N, 2)."""
    if f <= 0:
        raise ValueError(f"horizon must be positive, got {f}")
    n = e.shape[0]
    d = as_tensor(d)
    h = dec.init(e) if dec.init_from_context else Tensor(np.zeros((n, dec.hidden)))
    s = Tensor(np.zeros((n, 2)))
    positions, residuals = [], []
    for _ in range(f):
        h = dec.gru(concat([e, d, s], axis=1), h)
        step = dec.residual(h)
        s = s + step
        positions.append(s)
        residuals.append(step)
    return Rollout(positions, residuals)


def huber_reconstruction_loss(r: Rollout, future: np.ndarray, delta: float = 1.0) -> Tensor:
    """Huber penalty per coordinate, summed over x/y and averaged over agents and steps."""
    n, f = future.shape[0], future.shape[1]
    if len(r.positions) != f or r.positions[0].shape[0] != n:
        raise ValueError(f"rollout covers {len(r.positions)} steps x {r.positions[0].shape[0]} agents, "
                         f"ground truth is {f} x {n}")
    pred = concat(r.positions, axis=1)                 # (N, 2F), step-major
    target = future.reshape(n, 2 * f)
    return sum_(huber(pred - target, delta)) * (1.0 / (n * f))
