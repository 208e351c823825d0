"""Combined objective and the optimization loop."""

from __future__ import annotations

import logging
import time
from dataclasses import astuple, dataclass, field, fields
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .config import Config
from .decoder import huber_reconstruction_loss, rollout
from .destination import RegularizerConfig, destination_nll, mode_collapse_loss, predict_mixture
from .gradcore import (
    AdamState,
    NonFiniteError,
    Tape,
    Tensor,
    adam_step,
    backward,
    clip_grad_norm,
    exponential_lr,
    global_norm,
    make_rng,
)
from .model import MatrixModel, PreparedWindow, encode_batch, save_model

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


@dataclass
class LossTerms:
    destination: float
    mode_collapse: float
    reconstruction: float
    total: float


def combined_loss(batch: Sequence[PreparedWindow], model: MatrixModel, cfg: Config) -> tuple[Tensor, LossTerms]:
    if not batch:
        raise ValueError("empty batch")
    ids = [w.index for w in batch]
    e = encode_batch(model, batch)
    mix = predict_mixture(e, model.heads)
    dest = np.concatenate([w.features.dest_rel for w in batch], axis=0)
    future = np.concatenate([w.features.future_rel for w in batch], axis=0)

    def term(name, fn):
        try:
            return fn()
        except NonFiniteError as exc:
            raise NonFiniteError(f"{name} term non-finite in windows {ids}: {exc}") from exc

    l_dest = term("destination", lambda: destination_nll(mix, dest))
    l_mode = term("mode_collapse", lambda: mode_collapse_loss(mix, RegularizerConfig.from_config(cfg)))
    l_rec = term("reconstruction", lambda: huber_reconstruction_loss(
        rollout(e, dest, model.decoder, cfg.data_f), future, cfg.decoder_huber_delta))
    total = cfg.train_lambda1 * l_dest + cfg.train_lambda2 * l_mode + cfg.train_lambda3 * l_rec
    terms = LossTerms(l_dest.item(), l_mode.item(), l_rec.item(), total.item())
    return total, terms


def lr_at(epoch: int, cfg: Config) -> float:
    return exponential_lr(cfg.train_lr, cfg.train_decay, epoch)


@dataclass
class EpochRecord:
    epoch: int
    lr: float
    total: float
    destination: float
    mode_collapse: float
    reconstruction: float
    grad_norm: float
    grad_norm_max: float
    clip_scale_min: float
    batches: int
    wall_time: float


@dataclass
class TrainLog:
    records: list[EpochRecord] = field(default_factory=list)

    def to_tsv(self) -> str:
        header = "\t".join(f.name for f in fields(EpochRecord))
        rows = ["\t".join(_fmt(v) for v in astuple(r)) for r in self.records]
        return "\n".join([header] + rows) + "\n"


def _fmt(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


@dataclass
class StepStats:
    grad_norm: float
    scale: float
    terms: LossTerms


def train_step(model: MatrixModel, batch: Sequence[PreparedWindow], cfg: Config, state: AdamState, lr: float) -> StepStats:
    model.zero_grad()
    with Tape() as tape:
        total, terms = combined_loss(batch, model, cfg)
    if not np.isfinite(terms.total):
        raise NonFiniteError("non-finite loss")
    backward(total, tape)
    params = model.parameters()
    grads = [p.grad for p in params]
    norm = global_norm(grads)
    scale = clip_grad_norm(grads, cfg.train_clip)
    adam_step([p.data for p in params], grads, state, lr)
    return StepStats(norm, scale, terms)


def train(
    windows: Sequence[PreparedWindow],
    cfg: Config,
    seed: int | None = None,
    checkpoint_path=None,
    on_step: Callable[[int, int, StepStats], None] | None = None,
) -> tuple[MatrixModel, TrainLog]:
    """Train a fresh model; ``seed`` (default ``cfg.run_seed``) fixes init and shuffling."""
    if not windows:
        raise ValueError("train needs at least one window")
    seed = cfg.run_seed if seed is None else seed
    model = MatrixModel(cfg, seed)
    state = AdamState.for_params([p.data for p in model.parameters()])
    logbook = TrainLog()
    bs = cfg.train_batch_size
    for epoch in range(cfg.train_epochs):
        started = time.perf_counter()
        lr = lr_at(epoch, cfg)
        order = make_rng(seed, 1, epoch).permutation(len(windows))
        stats: list[StepStats] = []
        for b, lo in enumerate(range(0, len(order), bs)):
            batch = [windows[i] for i in order[lo:lo + bs]]
            try:
                st = train_step(model, batch, cfg, state, lr)
            except NonFiniteError as exc:
                raise TrainingError(f"epoch {epoch} batch {b}: {exc}") from exc
            stats.append(st)
            if on_step is not None:
                on_step(epoch, b, st)
        rec = EpochRecord(
            epoch=epoch,
            lr=lr,
            total=float(np.mean([s.terms.total for s in stats])),
            destination=float(np.mean([s.terms.destination for s in stats])),
            mode_collapse=float(np.mean([s.terms.mode_collapse for s in stats])),
            reconstruction=float(np.mean([s.terms.reconstruction for s in stats])),
            grad_norm=float(np.mean([s.grad_norm for s in stats])),
            grad_norm_max=float(max(s.grad_norm for s in stats)),
            clip_scale_min=float(min(s.scale for s in stats)),
            batches=len(stats),
            wall_time=time.perf_counter() - started,
        )
        logbook.records.append(rec)
        log.debug("epoch %d total %.4f rec %.4f", epoch, rec.total, rec.reconstruction)
        every = cfg.train_checkpoint_every
        if checkpoint_path and every and (epoch + 1) % every == 0:
            path = Path(checkpoint_path)
            save_model(path.with_name(f"{path.stem}.epoch{epoch + 1}{path.suffix}"), model, seed)
    if checkpoint_path:
        save_model(checkpoint_path, model, seed)
    return model, logbook
