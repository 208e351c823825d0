"""Self-describing parameter checkpoints.

Layout: an ASCII header (magic line, format version, seed, resolved config
lines, then one ``param <name> <rows> <cols>`` line per array in declaration
order, closed by ``end``), followed by the raw little-endian float32 arrays
concatenated in header order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = "MATRIXGEN-CKPT"
FORMAT_VERSION = 1
_LE_F32 = np.dtype("<f4")


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    params: dict[str, np.ndarray]
    seed: int
    config_lines: list[str] = field(default_factory=list)
    version: int = FORMAT_VERSION


def save_checkpoint(path, params: dict[str, np.ndarray], seed: int, config_lines=()) -> None:
    lines = [MAGIC, f"format {FORMAT_VERSION}", f"seed {int(seed)}"]
    lines += [f"config {line}" for line in config_lines]
    for name, arr in params.items():
        if arr.ndim != 2 or any(c.isspace() for c in name):
            raise CheckpointError(f"cannot store parameter {name!r} with shape {arr.shape}")
        lines.append(f"param {name} {arr.shape[0]} {arr.shape[1]}")
    lines.append("end")
    header = ("\n".join(lines) + "\n").encode("ascii")
    body = b"".join(np.ascontiguousarray(a, dtype=_LE_F32).tobytes() for a in params.values())
    Path(path).write_bytes(header + body)


def load_checkpoint(path) -> Checkpoint:
    raw = Path(path).read_bytes()
    marker = b"\nend\n"
    cut = raw.find(marker)
    if not raw.startswith(MAGIC.encode()) or cut < 0:
        raise CheckpointError(f"{path}: not a checkpoint")
    header = raw[:cut].decode("ascii").split("\n")
    body = raw[cut + len(marker):]
    version, seed, config, shapes = None, None, [], []
    for line in header[1:]:
        key, _, rest = line.partition(" ")
        if key == "format":
            version = int(rest)
        elif key == "seed":
            seed = int(rest)
        elif key == "config":
            config.append(rest)
        elif key == "param":
            name, rows, cols = rest.split()
            shapes.append((name, (int(rows), int(cols))))
        else:
            raise CheckpointError(f"{path}: unknown header line {line!r}")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported format {version}")
    params, offset = {}, 0
    for name, shape in shapes:
        n = shape[0] * shape[1] * _LE_F32.itemsize
        if offset + n > len(body):
            raise CheckpointError(f"{path}: truncated at parameter {name}")
        params[name] = np.frombuffer(body, dtype=_LE_F32, count=shape[0] * shape[1], offset=offset)\
            .reshape(shape).astype(np.float32)
        offset += n
    if offset != len(body):
        raise CheckpointError(f"{path}: {len(body) - offset} trailing bytes")
    return Checkpoint(params=params, seed=seed, config_lines=config, version=version)
