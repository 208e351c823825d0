from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import Tape, Tensor, backward


class NonDeterministicError(RuntimeError):
    pass


def finite_difference_check(f: Callable[[], Tensor], params: Sequence[Tensor], h: float = 1e-3) -> float:
    """Max relative error between tape gradients and central differences.

    ``f`` rebuilds the scalar loss from scratch on every call.  The error for
    one entry is ``|analytic - numeric| / max(1, |numeric|)``.
    """
    if h <= 0:
        raise ValueError("step must be positive")
    for p in params:
        p.zero_grad()
    with Tape() as tape:
        loss = f()
    base = loss.item()
    again = f().item()
    if base != again:
        raise NonDeterministicError(f"f returned {base!r} then {again!r}")
    backward(loss, tape)

    worst = 0.0
    for p in params:
        analytic = p.grad.reshape(-1).astype(np.float64)
        flat = p.data.reshape(-1)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + h
            up = f().item()
            flat[idx] = orig - h
            down = f().item()
            flat[idx] = orig
            numeric = (up - down) / (2.0 * h)
            err = abs(analytic[idx] - numeric) / max(1.0, abs(numeric))
            worst = max(worst, err)
    return worst
