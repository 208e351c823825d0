"""Gaussian-mixture model over each agent's end-of-horizon position.

Four affine heads map the context vector to mixture logits, means, log
standard deviations and pre-tanh correlations.  Training uses the mixture
negative log-likelihood of the observed final position plus a hinge penalty
that keeps components apart, no single weight dominant, and spreads bounded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gradcore import Linear, Module, Tensor, exp, log, logsumexp, relu, softmax, sqrt, square, sum_, take_cols, tanh
from .gradcore.tensor import as_tensor

LOG_2PI = math.log(2.0 * math.pi)


class MixtureHeads(Module):
    def __init__(self, context_dim: int, k: int, rng: np.random.Generator):
        super().__init__()
        self.k = k
        self.logits = Linear(context_dim, k, rng)
        self.means = Linear(context_dim, 2 * k, rng)
        self.log_sigmas = Linear(context_dim, 2 * k, rng)
        self.correlations = Linear(context_dim, k, rng)


@dataclass
class AgentMixture:
    """One agent's mixture as plain float64 arrays."""

    c: np.ndarray       # (K,)
    mu: np.ndarray      # (K, 2)
    sigma: np.ndarray   # (K, 2)
    rho: np.ndarray     # (K,)


@dataclass
class DestinationMixture:
    """Per-agent mixture tensors, each (N, K); x and y halves kept separate."""

    logits: Tensor
    c: Tensor
    log_c: Tensor
    mu_x: Tensor
    mu_y: Tensor
    log_sx: Tensor
    log_sy: Tensor
    sx: Tensor
    sy: Tensor
    rho: Tensor

    @property
    def k(self) -> int:
        return self.c.shape[1]

    @property
    def n_agents(self) -> int:
        return self.c.shape[0]

    def agent(self, i: int) -> AgentMixture:
        f = lambda t: t.data[i].astype(np.float64)  # noqa: E731
        return AgentMixture(
            c=f(self.c),
            mu=np.stack([f(self.mu_x), f(self.mu_y)], axis=1),
            sigma=np.stack([f(self.sx), f(self.sy)], axis=1),
            rho=f(self.rho),
        )


def predict_mixture(e: Tensor, heads: MixtureHeads) -> DestinationMixture:
    k = heads.k
    logits = heads.logits(e)
    mu = heads.means(e)
    log_sigma = heads.log_sigmas(e)
    rho = tanh(heads.correlations(e))
    log_sx, log_sy = log_sigma[:, 0:k], log_sigma[:, k:2 * k]
    return DestinationMixture(
        logits=logits,
        c=softmax(logits),
        log_c=logits - logsumexp(logits),
        mu_x=mu[:, 0:k],
        mu_y=mu[:, k:2 * k],
        log_sx=log_sx,
        log_sy=log_sy,
        sx=exp(log_sx),
        sy=exp(log_sy),
        rho=rho,
    )


def component_covariance(sigma, rho: float) -> np.ndarray:
    sx, sy = (float(s) for s in sigma)
    if sx <= 0 or sy <= 0 or not abs(rho) < 1:
        raise ValueError(f"need sigma > 0 and |rho| < 1, got sigma={sigma}, rho={rho}")
    off = rho * sx * sy
    return np.array([[sx * sx, off], [off, sy * sy]])


def mixture_log_density(m: DestinationMixture, d) -> Tensor:
    """log P(d_i) for every agent, shape (N, 1); ``d`` is (N, 2)."""
    d = as_tensor(d)
    zx = (d[:, 0:1] - m.mu_x) / m.sx
    zy = (d[:, 1:2] - m.mu_y) / m.sy
    one_minus = 1.0 - square(m.rho)
    quad = (square(zx) + square(zy) - 2.0 * m.rho * zx * zy) / one_minus
    log_norm = (-0.5) * quad - LOG_2PI - m.log_sx - m.log_sy - 0.5 * log(one_minus)
    return logsumexp(m.log_c + log_norm)


def destination_nll(m: DestinationMixture, d) -> Tensor:
    n = m.n_agents
    if n == 0:
        raise ValueError("destination_nll needs at least one agent")
    return sum_(mixture_log_density(m, d)) * (-1.0 / n)


def hinge(x) -> Tensor:
    """max(0, x); the subgradient at exactly 0 is 0."""
    return relu(x)


@dataclass(frozen=True)
class RegularizerConfig:
    alpha1: float = 1.0
    alpha2: float = 1.0
    alpha3: float = 1.0
    beta1: float = 1.0
    beta2: float = 2.0
    beta3: float = 0.5

    @classmethod
    def from_config(cls, cfg) -> "RegularizerConfig":
        return cls(cfg.reg_alpha1, cfg.reg_alpha2, cfg.reg_alpha3, cfg.reg_beta1, cfg.reg_beta2, cfg.reg_beta3)


def _ordered_pairs(k: int) -> tuple[np.ndarray, np.ndarray]:
    a, b = np.nonzero(~np.eye(k, dtype=bool))
    return a, b


def mode_collapse_loss(m: DestinationMixture, cfg: RegularizerConfig = RegularizerConfig()) -> Tensor:
    """Sum over agents of the three hinge penalties.

    Center separation is summed over ordered pairs (k1, k2), k1 != k2.
    """
    terms = []
    k = m.k
    if k > 1 and cfg.alpha1:
        a, b = _ordered_pairs(k)
        dx = take_cols(m.mu_x, a) - take_cols(m.mu_x, b)
        dy = take_cols(m.mu_y, a) - take_cols(m.mu_y, b)
        dist = sqrt(square(dx) + square(dy))
        terms.append(cfg.alpha1 * sum_(hinge(1.0 - cfg.beta1 * dist)))
    if cfg.alpha2:
        terms.append(cfg.alpha2 * sum_(hinge(cfg.beta2 * m.c - 1.0)))
    if cfg.alpha3:
        spread = sqrt(square(m.sx) + square(m.sy))
        terms.append(cfg.alpha3 * sum_(hinge(cfg.beta3 * spread - 1.0)))
    if not terms:
        return sum_(m.c) * 0.0
    total = terms[0]
    for t in terms[1:]:
        total = total + t
    return total


def sample_destination(m: AgentMixture, rng: np.random.Generator) -> np.ndarray:
    """Pick a component by weight, then draw from it through the Cholesky factor."""
    cdf = np.cumsum(m.c)
    k = min(int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right")), len(cdf) - 1)
    z = rng.standard_normal(2)
    sx, sy = m.sigma[k]
    r = m.rho[k]
    return m.mu[k] + np.array([sx * z[0], sy * (r * z[0] + math.sqrt(1.0 - r * r) * z[1])])
