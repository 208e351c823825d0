"""Trajectory files, fixed-horizon windows, dataset splits and synthetic scenes.

Files use the ETH/UCY text convention: one observation per line,
``frame-id agent-id x y`` separated by whitespace, positions in meters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from pathlib import Path
from typing import Sequence

import numpy as np

from .gradcore.rng import make_rng

DEFAULT_DT = 0.4
ETH_UCY_SUBSETS = ("ETH", "HOTEL", "UNIV", "ZARA1", "ZARA2")


class DatasetFormatError(ValueError):
    pass


@dataclass
class Scene:
    """Gap-free sequence of frames; ``frames[k]`` maps agent id to its (x, y)."""

    frames: list[dict[int, np.ndarray]]
    dt: float = DEFAULT_DT
    name: str = ""
    frame_origin: int = 0
    stride: int = 1

    def __len__(self) -> int:
        return len(self.frames)

    def raw_frame_id(self, index: int) -> int:
        return self.frame_origin + index * self.stride

    def agent_ids(self) -> list[int]:
        return sorted({a for fr in self.frames for a in fr})

    def records(self) -> list[tuple[int, int, float, float]]:
        out = []
        for k, fr in enumerate(self.frames):
            for agent in sorted(fr):
                x, y = fr[agent]
                out.append((self.raw_frame_id(k), agent, float(x), float(y)))
        return out

    def presence(self) -> tuple[list[int], np.ndarray, np.ndarray]:
        """Agent ids, an (A, T) presence mask and (A, T, 2) positions (NaN where absent)."""
        ids = self.agent_ids()
        row = {a: i for i, a in enumerate(ids)}
        mask = np.zeros((len(ids), len(self.frames)), dtype=bool)
        pos = np.full((len(ids), len(self.frames), 2), np.nan)
        for k, fr in enumerate(self.frames):
            for agent, p in fr.items():
                mask[row[agent], k] = True
                pos[row[agent], k] = p
        return ids, mask, pos


def _parse_int(token: str) -> int:
    value = float(token)
    if not value.is_integer():
        raise ValueError(token)
    return int(value)


def parse_dataset_text(text: str, name: str = "", dt: float = DEFAULT_DT, stride: int | None = None) -> Scene:
    rows: dict[tuple[int, int], tuple[float, float]] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split()
        try:
            if len(parts) < 4:
                raise ValueError(stripped)
            frame, agent = _parse_int(parts[0]), _parse_int(parts[1])
            x, y = float(parts[2]), float(parts[3])
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ValueError(stripped)
        except ValueError:
            raise DatasetFormatError(f"{name or '<text>'}: malformed line {lineno}: {stripped!r}") from None
        if (frame, agent) in rows:
            raise DatasetFormatError(f"{name or '<text>'}: duplicate frame {frame} agent {agent} at line {lineno}")
        rows[(frame, agent)] = (x, y)
    if not rows:
        raise DatasetFormatError(f"{name or '<text>'}: no observations")

    frame_ids = sorted({f for f, _ in rows})
    origin = frame_ids[0]
    if stride is None:
        stride = reduce(math.gcd, np.diff(frame_ids).tolist(), 0) or 1
    n_frames = (frame_ids[-1] - origin) // stride + 1
    frames: list[dict[int, np.ndarray]] = [{} for _ in range(n_frames)]
    for (frame, agent), xy in rows.items():
        offset = frame - origin
        if offset % stride:
            raise DatasetFormatError(f"{name or '<text>'}: frame {frame} is off the stride {stride}")
        frames[offset // stride][agent] = np.array(xy, dtype=np.float64)
    return Scene(frames=frames, dt=dt, name=name, frame_origin=origin, stride=stride)


def parse_dataset_file(path, dt: float = DEFAULT_DT, stride: int | None = None, name: str | None = None) -> Scene:
    path = Path(path)
    return parse_dataset_text(path.read_text(), name=name or path.stem, dt=dt, stride=stride)


def serialize_scene(scene: Scene) -> str:
    return "".join(f"{f} {a} {x!r} {y!r}\n" for f, a, x, y in scene.records())


def write_scene(scene: Scene, path) -> None:
    Path(path).write_text(serialize_scene(scene))


def load_dataset_dir(root) -> dict[str, list[Scene]]:
    """Subsets of a data directory: each ``*.txt`` child is a subset named by its
    stem, each child directory a subset of all ``*.txt`` files beneath it."""
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"data directory not found: {root}")
    subsets: dict[str, list[Scene]] = {}
    for child in sorted(root.iterdir()):
        if child.is_file() and child.suffix == ".txt":
            subsets[child.stem] = [parse_dataset_file(child)]
        elif child.is_dir():
            files = sorted(child.rglob("*.txt"))
            if files:
                subsets[child.name] = [parse_dataset_file(p, name=f"{child.name}/{p.stem}") for p in files]
    if not subsets:
        raise DatasetFormatError(f"{root}: no trajectory files")
    return subsets


# ---------------------------------------------------------------------------
# windows


@dataclass
class TrajectoryWindow:
    agents: tuple[int, ...]
    past: np.ndarray      # (N, H, 2)
    future: np.ndarray    # (N, F, 2)
    anchor: int           # frame index of the last observed step
    source: str = ""

    @property
    def n_agents(self) -> int:
        return len(self.agents)


def build_windows(scene: Scene, h: int = 8, f: int = 12) -> list[TrajectoryWindow]:
    if h < 2 or f < 1:
        raise ValueError(f"need h >= 2 and f >= 1, got h={h} f={f}")
    span = h + f
    n_frames = len(scene)
    if n_frames < span:
        return []
    # run_start[a] is the first frame of agent a's current unbroken run
    run_start: dict[int, int] = {}
    members: list[list[int]] = [[] for _ in range(n_frames - span + 1)]
    for t, frame in enumerate(scene.frames):
        for agent in [a for a in run_start if a not in frame]:
            del run_start[agent]
        start = t - span + 1
        for agent in frame:
            first = run_start.setdefault(agent, t)
            if start >= 0 and first <= start:
                members[start].append(agent)
    windows = []
    for start, agents in enumerate(members):
        if not agents:
            continue
        agents.sort()
        block = np.array([[scene.frames[start + k][a] for k in range(span)] for a in agents], dtype=np.float64)
        windows.append(TrajectoryWindow(
            agents=tuple(agents),
            past=block[:, :h].copy(),
            future=block[:, h:].copy(),
            anchor=start + h - 1,
            source=scene.name,
        ))
    return windows


@dataclass
class WindowFeatures:
    """Per-agent model inputs for one window, in each agent's own frame.

    Agent ``i``'s frame is a translation putting its last observed position
    at the origin; ``origin`` keeps that position for the inverse map.
    """

    node: np.ndarray          # (N, H, 4) relative positions and velocities
    past_world: np.ndarray    # (N, H, 2)
    velocity: np.ndarray      # (N, H, 2)
    origin: np.ndarray        # (N, 2)
    future_rel: np.ndarray    # (N, F, 2)
    dest_rel: np.ndarray      # (N, 2)
    window: TrajectoryWindow

    @property
    def n_agents(self) -> int:
        return self.node.shape[0]

    def denormalize(self, points: np.ndarray) -> np.ndarray:
        """Map (N, ..., 2) agent-frame points back to world coordinates."""
        shape = (self.origin.shape[0],) + (1,) * (points.ndim - 2) + (2,)
        return points + self.origin.reshape(shape)


def finite_difference_velocity(positions: np.ndarray, dt: float) -> np.ndarray:
    """Backward differences along axis 1; the first step repeats the second."""
    vel = np.empty_like(positions)
    vel[:, 1:] = np.diff(positions, axis=1) / dt
    vel[:, 0] = vel[:, 1]
    return vel


def normalize_window(w: TrajectoryWindow, dt: float = DEFAULT_DT) -> WindowFeatures:
    origin = w.past[:, -1, :].copy()
    rel = w.past - origin[:, None, :]
    vel = finite_difference_velocity(w.past, dt)
    future_rel = w.future - origin[:, None, :]
    return WindowFeatures(
        node=np.concatenate([rel, vel], axis=2),
        past_world=w.past,
        velocity=vel,
        origin=origin,
        future_rel=future_rel,
        dest_rel=future_rel[:, -1, :].copy(),
        window=w,
    )


# ---------------------------------------------------------------------------
# splits


@dataclass(frozen=True)
class SplitPlan:
    held_out: str
    training: tuple[str, ...]


def leave_one_out(subsets: Sequence[str], held_out: str) -> SplitPlan:
    if held_out not in subsets:
        raise KeyError(f"unknown subset {held_out!r}; known: {', '.join(subsets)}")
    return SplitPlan(held_out=held_out, training=tuple(s for s in subsets if s != held_out))


# ---------------------------------------------------------------------------
# synthetic scenes


@dataclass
class SynthSpec:
    """Goal-directed walkers.

    Agent ``j`` is assigned goal ``goals[j % len(goals)]`` (an offset from its
    branch point).  It first walks ``approach_steps`` steps along +x, arriving
    at the branch point, then heads for the goal at constant speed and idles
    once there.  Agents come in groups of ``group_size`` on lanes
    ``lane_spacing`` apart; a new group spawns every ``spawn_gap`` frames.
    With ``lifetime=None`` every agent is present for the whole scene.
    """

    n_agents: int
    goals: Sequence[tuple[float, float]]
    speed: float | Sequence[float] = 1.0
    noise: float = 0.0
    frames: int = 20
    seed: int = 0
    approach_steps: int = 0
    lifetime: int | None = None
    group_size: int = 1
    spawn_gap: int = 20
    lane_spacing: float = 8.0
    sway_amplitude: float | Sequence[float] = 0.0
    sway_period: float = 2.4
    dt: float = DEFAULT_DT
    stride: int = 10
    name: str = "synthetic"


def _walker(spec: SynthSpec, goal: np.ndarray, speed: float, amplitude: float, life: int, phase: float) -> np.ndarray:
    tau = np.arange(life, dtype=np.float64)
    a = spec.approach_steps
    step = speed * spec.dt
    pts = np.zeros((life, 2))
    normals = np.zeros((life, 2))
    pre = tau <= a
    pts[pre, 0] = step * (tau[pre] - a)
    normals[pre] = (0.0, 1.0)
    dist = float(np.hypot(*goal))
    direction = goal / dist if dist > 0 else np.array([1.0, 0.0])
    travelled = np.minimum(step * (tau[~pre] - a), dist)
    pts[~pre] = travelled[:, None] * direction
    normals[~pre] = (-direction[1], direction[0])
    if amplitude:
        sway = amplitude * np.sin(2 * np.pi * tau * spec.dt / spec.sway_period + phase)
        pts += sway[:, None] * normals
    return pts


def synth_scene(spec: SynthSpec) -> Scene:
    goals = np.asarray(spec.goals, dtype=np.float64).reshape(-1, 2)
    speeds = np.atleast_1d(np.asarray(spec.speed, dtype=np.float64))
    if np.any(speeds <= 0):
        raise ValueError("speed must be positive")
    amplitudes = np.atleast_1d(np.asarray(spec.sway_amplitude, dtype=np.float64))
    rng = make_rng(spec.seed)
    frames: list[dict[int, np.ndarray]] = [{} for _ in range(spec.frames)]
    for j in range(spec.n_agents):
        if spec.lifetime is None:
            start, life = 0, spec.frames
        else:
            start, life = (j // spec.group_size) * spec.spawn_gap, spec.lifetime
        lane = np.array([0.0, (j % spec.group_size) * spec.lane_spacing])
        phase = rng.uniform(0.0, 2 * np.pi)
        pts = _walker(spec, goals[j % len(goals)], speeds[j % len(speeds)], amplitudes[j % len(amplitudes)], life, phase) + lane
        if spec.noise > 0:
            pts = pts + rng.normal(0.0, spec.noise, size=pts.shape)
        for k in range(life):
            if start + k < spec.frames:
                frames[start + k][j + 1] = pts[k]
    return Scene(frames=frames, dt=spec.dt, name=spec.name, frame_origin=0, stride=spec.stride)


def preset(name: str, seed: int = 0, h: int = 8, f: int = 12) -> SynthSpec:
    """Named synthetic scenes used by tests and the ``synth`` command."""
    if name == "two-goal":
        # goals 4 m apart at +-45 degrees from the branch point, reached at the horizon end;
        # 2560 windows give ten steps per epoch at the default batch size
        n_groups = 2560
        return SynthSpec(
            n_agents=2 * n_groups, goals=[(2.0, 2.0), (2.0, -2.0)], speed=0.6, noise=0.02,
            frames=n_groups * (h + f), seed=seed, approach_steps=h - 1, lifetime=h + f,
            group_size=2, spawn_gap=h + f, lane_spacing=8.0, name="two-goal",
        )
    if name == "overfit":
        n = 10
        angles = np.linspace(-0.6, 0.6, n)
        goals = [(30.0 * np.cos(t), 30.0 * np.sin(t)) for t in angles]
        # per-agent speeds and sway amplitudes spread the motion primitives over
        # a wide range, so small fitting errors do not move much mass between bins
        return SynthSpec(
            n_agents=n, goals=goals, speed=[0.6, 1.4, 1.0, 1.9, 0.8, 1.6, 1.2, 1.75, 0.7, 1.3],
            frames=n * (h + f), seed=seed, lifetime=h + f, spawn_gap=h + f,
            sway_amplitude=[0.2, 1.0, 0.4, 0.8, 0.6, 0.3, 0.9, 0.5, 0.7, 0.1], sway_period=4.0, name="overfit",
        )
    if name == "straight":
        return SynthSpec(
            n_agents=3, goals=[(40.0, 0.0), (40.0, 0.0), (40.0, 0.0)], speed=[1.0, 1.2, 0.8],
            frames=40, seed=seed, group_size=3, lane_spacing=5.0, name="straight",
        )
    raise KeyError(f"unknown synthetic preset {name!r}")


PRESETS = ("two-goal", "overfit", "straight")
