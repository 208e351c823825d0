"""Sampling futures from a trained model, with collision filtering.

Every attempt draws from its own Philox stream keyed by
``(seed, GEN_STREAM, window index, attempt)``, so a sample set does not
depend on how windows are spread over worker threads.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import Config
from .decoder import rollout
from .destination import DestinationMixture, predict_mixture, sample_destination
from .gradcore import Tensor, make_rng, no_grad
from .model import MatrixModel, PreparedWindow, encode_batch

GEN_STREAM = 2
FORMAT_VERSION = 1
MAGIC = "# matrixgen-generated"


@dataclass
class GeneratedSample:
    destinations: np.ndarray   # (N, 2) world frame
    trajectories: np.ndarray   # (N, F, 2) world frame
    index: int
    stream: tuple[int, ...] = ()


@dataclass
class SampleSet:
    samples: list[GeneratedSample]
    attempts: int
    rejected: int
    degraded: bool = False
    window_index: int = 0

    @property
    def accepted(self) -> int:
        return self.attempts - self.rejected

    def trajectories(self) -> np.ndarray:
        """(L, N, F, 2) stack of the kept samples."""
        return np.stack([s.trajectories for s in self.samples])


@dataclass
class WindowContext:
    e: Tensor
    mixture: DestinationMixture


def window_context(window: PreparedWindow, model: MatrixModel) -> WindowContext:
    with no_grad():
        e = encode_batch(model, [window])
        return WindowContext(e, predict_mixture(e, model.heads))


def generate_sample(window: PreparedWindow, model: MatrixModel, rng: np.random.Generator,
                    ctx: WindowContext | None = None, index: int = 0) -> GeneratedSample:
    ctx = ctx or window_context(window, model)
    feats = window.features
    dest = np.stack([sample_destination(ctx.mixture.agent(i), rng) for i in range(feats.n_agents)])
    with no_grad():
        r = rollout(ctx.e, dest, model.decoder, model.cfg.data_f)
    return GeneratedSample(
        destinations=feats.denormalize(dest),
        trajectories=feats.denormalize(r.positions_array()),
        index=index,
    )


def colliding_steps(traj: np.ndarray, radius: float) -> int:
    """Number of steps at which some pair of agents is closer than ``radius``."""
    n = traj.shape[0]
    if n < 2 or radius <= 0:
        return 0
    diff = traj[:, None, :, :] - traj[None, :, :, :]       # (N, N, F, 2)
    dist = np.hypot(diff[..., 0], diff[..., 1])
    iu = np.triu_indices(n, k=1)
    return int(np.any(dist[iu] < radius, axis=0).sum())


def has_collision(sample, radius: float) -> bool:
    traj = sample.trajectories if isinstance(sample, GeneratedSample) else np.asarray(sample)
    return colliding_steps(traj, radius) > 0


def sample_set(window: PreparedWindow, model: MatrixModel, n_samples: int, radius: float,
               max_attempts: int, seed: int) -> SampleSet:
    if n_samples < 1 or max_attempts < n_samples:
        raise ValueError(f"need 1 <= samples <= max_attempts, got {n_samples}, {max_attempts}")
    ctx = window_context(window, model)
    kept: list[GeneratedSample] = []
    tried: list[tuple[int, GeneratedSample]] = []
    attempt = 0
    while attempt < max_attempts and len(kept) < n_samples:
        stream = (GEN_STREAM, window.index, attempt)
        s = generate_sample(window, model, make_rng(seed, *stream), ctx, index=attempt)
        s.stream = stream
        hits = colliding_steps(s.trajectories, radius)
        if hits == 0:
            kept.append(s)
        tried.append((hits, s))
        attempt += 1
    degraded = len(kept) < n_samples
    if degraded:
        kept = [s for _, s in sorted(tried, key=lambda t: (t[0], t[1].index))[:n_samples]]
        kept.sort(key=lambda s: s.index)
    rejected = sum(1 for hits, _ in tried if hits > 0)
    return SampleSet(kept, attempts=attempt, rejected=rejected, degraded=degraded, window_index=window.index)


def generate_sets(windows: Sequence[PreparedWindow], model: MatrixModel, cfg: Config, seed: int,
                  threads: int = 1) -> list[SampleSet]:
    def one(w):
        return sample_set(w, model, cfg.gen_samples, cfg.gen_collision_radius, cfg.gen_max_attempts, seed)

    if threads <= 1:
        return [one(w) for w in windows]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, windows))


# ---------------------------------------------------------------------------
# files


@dataclass
class GeneratedWindow:
    """A sample set read back from disk."""

    source: str
    anchor: int
    agents: tuple[int, ...]
    observed: np.ndarray        # (N, H, 2)
    samples: np.ndarray         # (L, N, F, 2)
    meta: dict[str, str] = field(default_factory=dict)


def format_sample_set(window: PreparedWindow, ss: SampleSet, cfg: Config, seed: int) -> str:
    """Header comments, then ``sample agent step x y`` lines.

    Steps ``-(H-1)..0`` repeat the observed history so each (sample, agent)
    block is a complete trajectory; steps ``1..F`` are generated.
    """
    w = window.features.window
    lines = [
        f"{MAGIC} {FORMAT_VERSION}",
        f"# source {w.source}",
        f"# anchor {w.anchor}",
        f"# window {window.index}",
        f"# seed {seed}",
        f"# samples {len(ss.samples)} attempts {ss.attempts} rejected {ss.rejected} degraded {int(ss.degraded)}",
    ]
    lines += [f"# config {line}" for line in cfg.to_lines()]
    h = w.past.shape[1]
    for s in ss.samples:
        for i, agent in enumerate(w.agents):
            for k in range(h):
                x, y = w.past[i, k]
                lines.append(f"{s.index} {agent} {k - h + 1} {float(x)!r} {float(y)!r}")
            for k, (x, y) in enumerate(s.trajectories[i], start=1):
                lines.append(f"{s.index} {agent} {k} {float(x)!r} {float(y)!r}")
    return "\n".join(lines) + "\n"


def is_generated_file(path) -> bool:
    with open(path) as fh:
        return fh.readline().startswith(MAGIC)


def read_generated(path) -> GeneratedWindow:
    meta: dict[str, str] = {}
    rows = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            parts = line[1:].strip().split(" ", 1)
            if len(parts) == 2 and parts[0] != "config":
                meta[parts[0]] = parts[1]
            continue
        if line.strip():
            s, a, k, x, y = line.split()
            rows.append((int(s), int(a), int(k), float(x), float(y)))
    samples = sorted({r[0] for r in rows})
    agents = sorted({r[1] for r in rows})
    steps = sorted({r[2] for r in rows})
    past_steps = [k for k in steps if k <= 0]
    fut_steps = [k for k in steps if k > 0]
    si = {v: i for i, v in enumerate(samples)}
    ai = {v: i for i, v in enumerate(agents)}
    ki = {v: i for i, v in enumerate(steps)}
    full = np.full((len(samples), len(agents), len(steps), 2), np.nan)
    for s, a, k, x, y in rows:
        full[si[s], ai[a], ki[k]] = (x, y)
    if np.isnan(full).any():
        raise ValueError(f"{path}: incomplete sample blocks")
    return GeneratedWindow(
        source=meta.get("source", ""),
        anchor=int(meta.get("anchor", -1)),
        agents=tuple(agents),
        observed=full[0, :, : len(past_steps)],
        samples=full[:, :, len(past_steps):len(past_steps) + len(fut_steps)],
        meta=meta,
    )
