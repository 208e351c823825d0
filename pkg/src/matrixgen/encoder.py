"""History and interaction encoder: a node LSTM over each agent's own past and
an edge LSTM over the summed states of its neighbors."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .gradcore import LSTMCell, Module, ShapeError, Tensor, concat
from .trajdata import WindowFeatures

FEATURE_DIM = 4


def edge_inputs(features: WindowFeatures, radius: float) -> np.ndarray:
    """Per-step sum of neighbor (d_position, d_velocity) relative to the ego.

    Neighbors farther than ``radius`` at a step are left out of that step.
    The rows are sorted before summing so the result does not depend on
    agent order, bit for bit.
    """
    pos, vel = features.past_world, features.velocity
    n, h, _ = pos.shape
    out = np.zeros((n, h, FEATURE_DIM))
    if n < 2:
        return out
    for t in range(h):
        d_pos = pos[None, :, t, :] - pos[:, None, t, :]   # [ego, other]
        d_vel = vel[None, :, t, :] - vel[:, None, t, :]
        dist = np.hypot(d_pos[..., 0], d_pos[..., 1])
        near = dist <= radius
        np.fill_diagonal(near, False)
        states = np.concatenate([d_pos, d_vel], axis=2)
        for i in range(n):
            rows = states[i, near[i]]
            if rows.shape[0]:
                order = np.lexsort(rows.T[::-1])
                out[i, t] = rows[order].sum(axis=0)
    return out


class Encoder(Module):
    def __init__(self, node_hidden: int, edge_hidden: int, rng: np.random.Generator, radius: float = 3.0):
        super().__init__()
        self.radius = radius
        self.node_lstm = LSTMCell(FEATURE_DIM, node_hidden, rng)
        self.edge_lstm = LSTMCell(FEATURE_DIM, edge_hidden, rng)

    @property
    def context_dim(self) -> int:
        return self.node_lstm.hidden + self.edge_lstm.hidden

    def __call__(self, node: np.ndarray, edge: np.ndarray) -> Tensor:
        return concat([run_lstm(self.node_lstm, node), run_lstm(self.edge_lstm, edge)], axis=1)

    def encode_windows(self, batch: Sequence[WindowFeatures]) -> Tensor:
        node = np.concatenate([w.node for w in batch], axis=0)
        edge = np.concatenate([edge_inputs(w, self.radius) for w in batch], axis=0)
        return self(node, edge)


def run_lstm(cell: LSTMCell, seq: np.ndarray, horizon: int | None = None) -> Tensor:
    """Final hidden state after feeding ``seq`` (N, H, 4) from a zero state."""
    if seq.ndim != 3 or seq.shape[2] != cell.in_dim:
        raise ShapeError(f"expected (N, H, {cell.in_dim}) history, got {seq.shape}")
    if horizon is not None and seq.shape[1] != horizon:
        raise ShapeError(f"expected {horizon} history steps, got {seq.shape[1]}")
    n = seq.shape[0]
    h = Tensor(np.zeros((n, cell.hidden)))
    c = Tensor(np.zeros((n, cell.hidden)))
    for t in range(seq.shape[1]):
        h, c = cell(Tensor(seq[:, t, :]), h, c)
    return h


def encode_node_history(cell: LSTMCell, node: np.ndarray, horizon: int = 8) -> Tensor:
    return run_lstm(cell, node, horizon)


def encode_edge_history(cell: LSTMCell, edge: np.ndarray) -> Tensor:
    return run_lstm(cell, edge)
