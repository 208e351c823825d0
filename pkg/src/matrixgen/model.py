"""The full generator: encoder, destination mixture heads and residual decoder."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import Config
from .decoder import Decoder
from .destination import MixtureHeads
from .encoder import Encoder, edge_inputs
from .gradcore import Module, Tensor, load_checkpoint, make_rng, save_checkpoint
from .trajdata import TrajectoryWindow, WindowFeatures, normalize_window


class MatrixModel(Module):
    def __init__(self, cfg: Config, seed: int = 0):
        super().__init__()
        self.cfg = cfg
        rng = make_rng(seed, 0)
        self.encoder = Encoder(cfg.encoder_node_hidden, cfg.encoder_edge_hidden, rng, cfg.encoder_radius)
        self.heads = MixtureHeads(self.encoder.context_dim, cfg.gmm_k, rng)
        self.decoder = Decoder(self.encoder.context_dim, cfg.decoder_hidden, rng, cfg.decoder_init_from_context)


@dataclass
class PreparedWindow:
    """Normalized window plus its cached neighbor inputs."""

    features: WindowFeatures
    edge: np.ndarray
    index: int = 0

    @property
    def n_agents(self) -> int:
        return self.features.n_agents


def prepare_windows(windows: Sequence[TrajectoryWindow], cfg: Config) -> list[PreparedWindow]:
    out = []
    for i, w in enumerate(windows):
        feats = normalize_window(w, cfg.data_dt)
        out.append(PreparedWindow(feats, edge_inputs(feats, cfg.encoder_radius), i))
    return out


def encode_batch(model: MatrixModel, batch: Sequence[PreparedWindow]) -> Tensor:
    node = np.concatenate([w.features.node for w in batch], axis=0)
    edge = np.concatenate([w.edge for w in batch], axis=0)
    return model.encoder(node, edge)


def save_model(path, model: MatrixModel, seed: int) -> None:
    save_checkpoint(path, model.state_dict(), seed, model.cfg.to_lines())


def load_model(path) -> tuple[MatrixModel, int]:
    ckpt = load_checkpoint(path)
    cfg = Config.from_lines(ckpt.config_lines)
    model = MatrixModel(cfg, ckpt.seed)
    model.load_state_dict(ckpt.params)
    return model, ckpt.seed
