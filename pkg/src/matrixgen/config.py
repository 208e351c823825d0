"""Flat ``namespace.key=value`` configuration.

Field names map to keys by turning the first underscore into a dot
(``encoder_node_hidden`` <-> ``encoder.node_hidden``), so namespaces never
contain underscores.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Config:
    data_h: int = 8
    data_f: int = 12
    data_dt: float = 0.4

    encoder_node_hidden: int = 128
    encoder_edge_hidden: int = 128
    encoder_radius: float = 3.0

    gmm_k: int = 4

    reg_alpha1: float = 1.0
    reg_alpha2: float = 1.0
    reg_alpha3: float = 1.0
    reg_beta1: float = 1.0
    reg_beta2: float = 2.0
    reg_beta3: float = 0.5

    decoder_hidden: int = 128
    decoder_huber_delta: float = 1.0
    decoder_init_from_context: bool = True

    train_lambda1: float = 1.0
    train_lambda2: float = 1.0
    train_lambda3: float = 1.0
    train_epochs: int = 100
    train_batch_size: int = 256
    train_lr: float = 0.001
    train_decay: float = 0.9999
    train_clip: float = 1.0
    train_checkpoint_every: int = 0

    gen_samples: int = 20
    gen_collision_radius: float = 0.2
    gen_max_attempts: int = 200

    metrics_bins: int = 20
    metrics_v_min: float = 0.05
    metrics_asd_mode: str = "max"

    run_seed: int = 0

    def __post_init__(self):
        checks = [
            (self.data_h >= 2, "data.h must be >= 2"),
            (self.data_f >= 1, "data.f must be >= 1"),
            (self.data_dt > 0, "data.dt must be positive"),
            (self.gmm_k >= 1, "gmm.k must be >= 1"),
            (self.encoder_radius >= 0, "encoder.radius must be >= 0"),
            (min(self.reg_alpha1, self.reg_alpha2, self.reg_alpha3) >= 0, "reg.alpha* must be >= 0"),
            (min(self.reg_beta1, self.reg_beta2, self.reg_beta3) > 0, "reg.beta* must be > 0"),
            (self.decoder_huber_delta > 0, "decoder.huber_delta must be positive"),
            (min(self.train_lambda1, self.train_lambda2, self.train_lambda3) >= 0, "train.lambda* must be >= 0"),
            (self.train_lr > 0, "train.lr must be positive"),
            (0 < self.train_decay <= 1, "train.decay must be in (0, 1]"),
            (self.train_clip > 0, "train.clip must be positive"),
            (self.train_batch_size >= 1, "train.batch_size must be >= 1"),
            (self.gen_samples >= 1, "gen.samples must be >= 1"),
            (self.gen_max_attempts >= self.gen_samples, "gen.max_attempts must be >= gen.samples"),
            (self.gen_collision_radius >= 0, "gen.collision_radius must be >= 0"),
            (self.metrics_bins >= 1, "metrics.bins must be >= 1"),
            (self.metrics_asd_mode in ("max", "mean"), "metrics.asd_mode must be max or mean"),
            (self.run_seed >= 0, "run.seed must be >= 0"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)

    @property
    def context_dim(self) -> int:
        return self.encoder_node_hidden + self.encoder_edge_hidden

    def replace(self, **changes) -> "Config":
        return dataclasses.replace(self, **changes)

    def with_overrides(self, pairs: dict[str, str]) -> "Config":
        """Apply ``{"train.epochs": "50", ...}`` style overrides."""
        changes = {}
        types = {f.name: f.type for f in fields(self)}
        for key, raw in pairs.items():
            name = key_to_field(key)
            if name not in types:
                raise ConfigError(f"unknown config key: {key}")
            changes[name] = _coerce(key, raw, types[name])
        return self.replace(**changes)

    def to_lines(self) -> list[str]:
        return [f"{field_to_key(f.name)}={_format(getattr(self, f.name))}" for f in fields(self)]

    def dumps(self) -> str:
        return "\n".join(self.to_lines()) + "\n"

    @classmethod
    def loads(cls, text: str) -> "Config":
        pairs = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
            pairs[key.strip()] = value.strip()
        return cls().with_overrides(pairs)

    @classmethod
    def load(cls, path) -> "Config":
        return cls.loads(Path(path).read_text())

    @classmethod
    def from_lines(cls, lines) -> "Config":
        return cls.loads("\n".join(lines))


def key_to_field(key: str) -> str:
    return key.replace(".", "_", 1)


def field_to_key(name: str) -> str:
    return name.replace("_", ".", 1)


def _coerce(key: str, raw: str, typ):
    typ = {"int": int, "float": float, "bool": bool, "str": str}.get(typ, typ)
    try:
        if typ is bool:
            if raw.lower() not in ("true", "false"):
                raise ValueError(raw)
            return raw.lower() == "true"
        return typ(raw)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)
