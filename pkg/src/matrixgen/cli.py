"""Command-line entry point: ``matrixgen {synth,train,generate,evaluate,inspect-ckpt}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .config import Config, ConfigError
from .evaluation import REPORT_VERSION, build_report, generated_windows, reference_windows
from .generation import FORMAT_VERSION as GENERATED_VERSION
from .generation import format_sample_set, generate_sets
from .gradcore import FORMAT_VERSION as CKPT_VERSION
from .gradcore import GENERATOR_NAME, load_checkpoint
from .model import load_model, prepare_windows
from .trajdata import PRESETS, build_windows, leave_one_out, load_dataset_dir, preset, serialize_scene, synth_scene
from .training import train


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def _resolve_config(args) -> Config:
    cfg = Config.load(args.config) if getattr(args, "config", None) else Config()
    pairs = {}
    for item in getattr(args, "set", None) or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        pairs[key] = value
    flag_keys = {"seed": "run.seed", "epochs": "train.epochs", "samples": "gen.samples"}
    for attr, key in flag_keys.items():
        value = getattr(args, attr, None)
        if value is not None:
            pairs[key] = str(value)
    return cfg.with_overrides(pairs)


def _data_windows(data_dir, cfg: Config, subsets=None):
    loaded = load_dataset_dir(data_dir)
    windows = []
    for name in subsets if subsets is not None else list(loaded):
        for scene in loaded[name]:
            windows.extend(build_windows(scene, cfg.data_h, cfg.data_f))
    return loaded, windows


def cmd_synth(args) -> None:
    cfg = _resolve_config(args)
    spec = preset(args.spec, seed=cfg.run_seed, h=cfg.data_h, f=cfg.data_f)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    header = f"# matrixgen synth spec={args.spec} seed={cfg.run_seed}\n"
    header += "".join(f"# config {line}\n" for line in cfg.to_lines())
    (out / f"{args.spec}.txt").write_text(header + serialize_scene(synth_scene(spec)))


def cmd_train(args) -> None:
    cfg = _resolve_config(args)
    loaded = load_dataset_dir(args.data)
    subsets = list(loaded)
    if args.holdout:
        subsets = list(leave_one_out(subsets, args.holdout).training)
    _, windows = _data_windows(args.data, cfg, subsets)
    if not windows:
        raise CliError(f"no complete {cfg.data_h}+{cfg.data_f} windows in {args.data}")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    _, logbook = train(prepare_windows(windows, cfg), cfg, checkpoint_path=out)
    log_path = Path(args.log) if args.log else out.with_name(out.name + ".log.tsv")
    log_path.write_text(f"# seed {cfg.run_seed}\n" + "".join(f"# config {x}\n" for x in cfg.to_lines())
                        + logbook.to_tsv())


def cmd_generate(args) -> None:
    model, _ = load_model(args.ckpt)
    cfg = _resolve_config(args).replace(**{
        f: getattr(model.cfg, f) for f in model.cfg.__dataclass_fields__ if not f.startswith(("gen_", "run_"))
    })
    subsets = [args.subset] if args.subset else None
    _, windows = _data_windows(args.data, cfg, subsets)
    prepared = prepare_windows(windows, cfg)
    sets = generate_sets(prepared, model, cfg, cfg.run_seed, threads=args.threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for pw, ss in zip(prepared, sets):
        (out / f"window_{pw.index:06d}.txt").write_text(format_sample_set(pw, ss, cfg, cfg.run_seed))


def cmd_evaluate(args) -> None:
    cfg = _resolve_config(args)
    report = build_report(reference_windows(args.ref, cfg), generated_windows(args.gen, cfg), cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.txt").write_text(report.to_text(cfg, cfg.run_seed))
    (out / "histograms.tsv").write_text(report.histograms_tsv())
    print(f"ade={report.ade:.4f} fde={report.fde:.4f} asd={report.asd:.4f} "
          + " ".join(f"chi2.{k}={v:.4f}" for k, v in report.chi2.items()))


def cmd_inspect(args) -> None:
    ckpt = load_checkpoint(args.ckpt)
    print(f"format {ckpt.version}")
    print(f"seed {ckpt.seed}")
    for line in ckpt.config_lines:
        print(f"config {line}")
    total = 0
    for name, arr in ckpt.params.items():
        total += arr.size
        print(f"param {name} {arr.shape[0]}x{arr.shape[1]}")
    print(f"parameters {total}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="matrixgen", description="Multi-agent trajectory generator with mixture destinations.")
    p.add_argument("--version", action="store_true", help="print version and file format numbers")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, seed=True):
        sp.add_argument("--config", help="flat key=value config file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
        if seed:
            sp.add_argument("--seed", type=int)
        sp.add_argument("--threads", type=int, default=1)

    sp = sub.add_parser("synth", help="write a synthetic scene")
    sp.add_argument("--spec", required=True, choices=PRESETS)
    sp.add_argument("--out", required=True)
    common(sp)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("train", help="train a model")
    sp.add_argument("--data", required=True)
    sp.add_argument("--holdout")
    sp.add_argument("--out", required=True, help="checkpoint path")
    sp.add_argument("--epochs", type=int)
    sp.add_argument("--log", help="train log path (default: <out>.log.tsv)")
    common(sp)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("generate", help="sample futures for every window of a dataset")
    sp.add_argument("--ckpt", required=True)
    sp.add_argument("--data", required=True)
    sp.add_argument("--subset", help="only this subset of the data directory")
    sp.add_argument("--samples", type=int)
    sp.add_argument("--out", required=True)
    common(sp)
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("evaluate", help="ADE/FDE/ASD and motion-primitive chi-square")
    sp.add_argument("--ref", required=True)
    sp.add_argument("--gen", required=True)
    sp.add_argument("--out", default="report")
    common(sp)
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("inspect-ckpt", help="print a checkpoint header")
    sp.add_argument("ckpt")
    sp.set_defaults(func=cmd_inspect)
    return p


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.version:
            print(f"matrixgen {__version__} checkpoint-format {CKPT_VERSION} report-format {REPORT_VERSION} "
                  f"generated-format {GENERATED_VERSION} rng {GENERATOR_NAME}")
            return 0
        if not args.command:
            raise CliError("missing subcommand")
        if getattr(args, "threads", 1) < 1:
            raise CliError("--threads must be >= 1")
        args.func(args)
        return 0
    except (CliError, ConfigError, KeyError, ValueError, FileNotFoundError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {type(exc).__name__}: {msg}".replace("\n", " "), file=sys.stderr)
        return 2 if isinstance(exc, CliError) else 1


def main() -> None:
    logging.basicConfig(level=logging.WARNING)
    sys.exit(run())


if __name__ == "__main__":
    main()
