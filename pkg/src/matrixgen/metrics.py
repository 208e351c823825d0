"""Displacement, diversity and motion-primitive realism metrics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

PRIMITIVES = ("velocity", "acceleration", "angular_velocity", "angular_acceleration")


def _check_same(pred: np.ndarray, gt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pred, gt = np.asarray(pred, dtype=np.float64), np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape or pred.ndim != 3 or pred.shape[2] != 2:
        raise ValueError(f"expected matching (N, F, 2) arrays, got {pred.shape} and {gt.shape}")
    return pred, gt


def ade(pred, gt) -> float:
    pred, gt = _check_same(pred, gt)
    return float(np.linalg.norm(pred - gt, axis=2).mean())


def fde(pred, gt) -> float:
    pred, gt = _check_same(pred, gt)
    return float(np.linalg.norm(pred[:, -1] - gt[:, -1], axis=1).mean())


def per_agent_errors(samples, gt, metric: str = "ade") -> np.ndarray:
    """(L, N) displacement error of every sample for every agent."""
    samples = np.asarray(samples, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if samples.ndim != 4 or samples.shape[1:] != gt.shape:
        raise ValueError(f"samples {samples.shape} do not match ground truth {gt.shape}")
    dist = np.linalg.norm(samples - gt[None], axis=3)
    if metric == "ade":
        return dist.mean(axis=2)
    if metric == "fde":
        return dist[:, :, -1]
    raise ValueError(f"unknown metric {metric!r}")


def best_of(samples, gt, metric: str = "ade") -> float:
    """Best sample per agent, then averaged over agents."""
    if len(samples) == 0:
        raise ValueError("best_of needs at least one sample")
    return float(per_agent_errors(samples, gt, metric).min(axis=0).mean())


def asd(samples, mode: str = "max") -> float:
    """Time-averaged distance between sample pairs of one agent, (L, F, 2) input.

    ``mode="max"`` takes the farthest pair; ``"mean"`` averages over pairs.
    """
    s = np.asarray(samples, dtype=np.float64)
    if s.ndim != 3 or s.shape[0] < 2:
        raise ValueError(f"asd needs (L>=2, F, 2) samples, got {s.shape}")
    pair = np.linalg.norm(s[:, None] - s[None, :], axis=3).mean(axis=2)
    iu = np.triu_indices(s.shape[0], k=1)
    vals = pair[iu]
    return float(vals.max() if mode == "max" else vals.mean())


def scene_asd(samples, mode: str = "max") -> float:
    """Mean over agents of :func:`asd`; ``samples`` is (L, N, F, 2)."""
    s = np.asarray(samples, dtype=np.float64)
    return float(np.mean([asd(s[:, i], mode) for i in range(s.shape[1])]))


# ---------------------------------------------------------------------------
# motion primitives


@dataclass
class PrimitiveSeries:
    velocity: np.ndarray
    acceleration: np.ndarray
    angular_velocity: np.ndarray
    angular_acceleration: np.ndarray

    def get(self, name: str) -> np.ndarray:
        return getattr(self, name)

    @classmethod
    def concatenate(cls, parts: Sequence["PrimitiveSeries"]) -> "PrimitiveSeries":
        return cls(*(np.concatenate([p.get(n) for p in parts]) if parts else np.empty(0) for n in PRIMITIVES))


def wrap_angle(x):
    """Wrap into (-pi, pi]."""
    return x - 2 * np.pi * np.ceil((x - np.pi) / (2 * np.pi))


def _headings(vel: np.ndarray, v_min: float) -> np.ndarray:
    speed = np.hypot(vel[:, 0], vel[:, 1])
    theta = np.full(len(vel), np.nan)
    last = np.nan
    for i, (v, s) in enumerate(zip(vel, speed)):
        if s >= v_min:
            last = np.arctan2(v[1], v[0])
        theta[i] = last
    return theta


def trajectory_primitives(traj, dt: float, v_min: float = 0.05) -> PrimitiveSeries:
    traj = np.asarray(traj, dtype=np.float64)
    if traj.ndim != 2 or traj.shape[1] != 2 or traj.shape[0] < 4:
        raise ValueError(f"need a (T>=4, 2) trajectory, got {traj.shape}")
    vel = np.diff(traj, axis=0) / dt
    acc = np.diff(vel, axis=0) / dt
    theta = _headings(vel, v_min)
    omega = wrap_angle(np.diff(theta)) / dt
    alpha = np.diff(omega) / dt
    return PrimitiveSeries(
        velocity=np.hypot(vel[:, 0], vel[:, 1]),
        acceleration=np.hypot(acc[:, 0], acc[:, 1]),
        angular_velocity=omega[~np.isnan(omega)],
        angular_acceleration=alpha[~np.isnan(alpha)],
    )


def motion_primitives(trajectories: Iterable, dt: float, v_min: float = 0.05) -> PrimitiveSeries:
    """Pool primitives over many (T, 2) trajectories."""
    return PrimitiveSeries.concatenate([trajectory_primitives(t, dt, v_min) for t in trajectories])


# ---------------------------------------------------------------------------
# chi-square


@dataclass
class Histogram:
    edges: np.ndarray
    generated: np.ndarray
    reference: np.ndarray


def shared_edges(a: np.ndarray, b: np.ndarray, bins: int) -> np.ndarray:
    both = np.concatenate([a, b])
    lo, hi = float(both.min()), float(both.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    return np.linspace(lo, hi, bins + 1)


def density(values: np.ndarray, edges: np.ndarray) -> np.ndarray:
    counts, _ = np.histogram(values, bins=edges)
    total = counts.sum()
    return counts / total if total else counts.astype(np.float64)


def chi_square_distance(x: np.ndarray, y: np.ndarray) -> float:
    s = x + y
    nz = s > 0
    return float(np.sum((x[nz] - y[nz]) ** 2 / s[nz]))


def chi_square(generated: PrimitiveSeries, reference: PrimitiveSeries, bins: int = 20) -> tuple[dict[str, float], dict[str, Histogram]]:
    values, hists = {}, {}
    for name in PRIMITIVES:
        g, r = generated.get(name), reference.get(name)
        if g.size == 0 or r.size == 0:
            raise ValueError(f"chi_square: empty {name} series")
        edges = shared_edges(g, r, bins)
        hg, hr = density(g, edges), density(r, edges)
        values[name] = chi_square_distance(hg, hr)
        hists[name] = Histogram(edges, hg, hr)
    return values, hists
