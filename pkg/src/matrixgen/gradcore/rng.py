"""Seeded random streams.

All randomness goes through Philox (a counter-based generator), keyed by a
seed plus an optional tuple of stream ids.  Two streams with different ids
never share state, so work split across threads or reordered stays
reproducible.
"""

from __future__ import annotations

import numpy as np

GENERATOR_NAME = "philox4x64"


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    entropy = [int(seed)] + [int(s) for s in stream]
    if any(v < 0 for v in entropy):
        raise ValueError(f"seed and stream ids must be non-negative, got {entropy}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
