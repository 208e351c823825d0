"""Assemble a metric report from reference windows and generated sample sets."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import metrics
from .config import Config
from .generation import is_generated_file, read_generated
from .trajdata import TrajectoryWindow, build_windows, load_dataset_dir, parse_dataset_file

REPORT_VERSION = 1
REPORT_MAGIC = "# matrixgen-report"


@dataclass
class EvalWindow:
    source: str
    anchor: int
    agents: tuple[int, ...]
    last_observed: np.ndarray   # (N, 2)
    samples: np.ndarray         # (L, N, F, 2)

    @property
    def key(self) -> tuple[str, int]:
        return self.source, self.anchor

    @property
    def subset(self) -> str:
        return self.source.split("/", 1)[0]


@dataclass
class MetricReport:
    ade: float
    fde: float
    asd: float
    asd_agents: int
    windows: int
    agents: int
    samples: int
    chi2: dict[str, float]
    chi2_by_subset: dict[str, dict[str, float]]
    histograms: dict[str, dict[str, metrics.Histogram]] = field(repr=False, default_factory=dict)

    def to_text(self, cfg: Config | None = None, seed: int | None = None) -> str:
        lines = [f"{REPORT_MAGIC} {REPORT_VERSION}"]
        if seed is not None:
            lines.append(f"# seed {seed}")
        if cfg is not None:
            lines += [f"# config {line}" for line in cfg.to_lines()]
        lines += [
            f"ade {self.ade!r}",
            f"fde {self.fde!r}",
            f"asd {self.asd!r}",
            f"asd_agents {self.asd_agents}",
            f"windows {self.windows}",
            f"agents {self.agents}",
            f"samples {self.samples}",
        ]
        lines += [f"chi2.{name} {self.chi2[name]!r}" for name in metrics.PRIMITIVES]
        for subset in sorted(self.chi2_by_subset):
            lines += [f"chi2.{subset}.{name} {self.chi2_by_subset[subset][name]!r}" for name in metrics.PRIMITIVES]
        return "\n".join(lines) + "\n"

    def histograms_tsv(self) -> str:
        rows = ["subset\tprimitive\tbin\tlow\thigh\tgenerated\treference"]
        for subset in sorted(self.histograms):
            for name in metrics.PRIMITIVES:
                hist = self.histograms[subset][name]
                for b in range(len(hist.generated)):
                    rows.append("\t".join([
                        subset, name, str(b), repr(float(hist.edges[b])), repr(float(hist.edges[b + 1])),
                        repr(float(hist.generated[b])), repr(float(hist.reference[b])),
                    ]))
        return "\n".join(rows) + "\n"


def build_report(reference: Sequence[TrajectoryWindow], generated: Sequence[EvalWindow], cfg: Config) -> MetricReport:
    ref_by_key = {(w.source, w.anchor): w for w in reference}
    best_ade, best_fde, asds = [], [], []
    gen_tracks: dict[str, list[np.ndarray]] = {}
    ref_tracks: dict[str, list[np.ndarray]] = {}
    max_l = 0
    for g in generated:
        ref = ref_by_key.get(g.key)
        if ref is None:
            raise KeyError(f"no reference window for {g.source} anchor {g.anchor}")
        rows = [ref.agents.index(a) for a in g.agents]
        gt = ref.future[rows]
        per = metrics.per_agent_errors(g.samples, gt, "ade")
        best_ade.extend(per.min(axis=0))
        best_fde.extend(metrics.per_agent_errors(g.samples, gt, "fde").min(axis=0))
        max_l = max(max_l, g.samples.shape[0])
        if g.samples.shape[0] >= 2:
            asds.extend(metrics.asd(g.samples[:, i], cfg.metrics_asd_mode) for i in range(len(rows)))
        start = ref.past[rows, -1][:, None, :]
        ref_tracks.setdefault(g.subset, []).extend(np.concatenate([start, gt], axis=1))
        for s in g.samples:
            gen_tracks.setdefault(g.subset, []).extend(np.concatenate([start, s], axis=1))
    if not generated:
        raise ValueError("nothing to evaluate")

    by_subset, hists = {}, {}
    for subset in sorted(gen_tracks):
        gen_p = metrics.motion_primitives(gen_tracks[subset], cfg.data_dt, cfg.metrics_v_min)
        ref_p = metrics.motion_primitives(ref_tracks[subset], cfg.data_dt, cfg.metrics_v_min)
        by_subset[subset], hists[subset] = metrics.chi_square(gen_p, ref_p, cfg.metrics_bins)
    chi2 = {name: float(np.mean([by_subset[s][name] for s in by_subset])) for name in metrics.PRIMITIVES}
    return MetricReport(
        ade=float(np.mean(best_ade)),
        fde=float(np.mean(best_fde)),
        asd=float(np.mean(asds)) if asds else float("nan"),
        asd_agents=len(asds),
        windows=len(generated),
        agents=len(best_ade),
        samples=max_l,
        chi2=chi2,
        chi2_by_subset=by_subset,
        histograms=hists,
    )


def eval_windows_from_sets(prepared, sample_sets) -> list[EvalWindow]:
    out = []
    for pw, ss in zip(prepared, sample_sets):
        w = pw.features.window
        out.append(EvalWindow(w.source, w.anchor, w.agents, w.past[:, -1].copy(), ss.trajectories()))
    return out


def reference_windows(ref_dir, cfg: Config) -> list[TrajectoryWindow]:
    windows = []
    for scenes in load_dataset_dir(ref_dir).values():
        for scene in scenes:
            windows.extend(build_windows(scene, cfg.data_h, cfg.data_f))
    return windows


def generated_windows(gen_dir, cfg: Config) -> list[EvalWindow]:
    """Generated sample files, or plain dataset files treated as one-sample sets."""
    root = Path(gen_dir)
    files = sorted(p for p in root.rglob("*.txt") if p.is_file())
    if not files:
        raise FileNotFoundError(f"no .txt files under {root}")
    out = []
    plain = [p for p in files if not is_generated_file(p)]
    for p in files:
        if p in plain:
            continue
        g = read_generated(p)
        out.append(EvalWindow(g.source, g.anchor, g.agents, g.observed[:, -1], g.samples))
    if plain:
        for p in plain:
            rel = p.relative_to(root)
            name = p.stem if len(rel.parts) == 1 else f"{rel.parts[0]}/{p.stem}"
            for w in build_windows(parse_dataset_file(p, name=name, dt=cfg.data_dt), cfg.data_h, cfg.data_f):
                out.append(EvalWindow(w.source, w.anchor, w.agents, w.past[:, -1], w.future[None]))
    return out
