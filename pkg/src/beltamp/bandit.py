"""Beta-posterior helpers: quantiles, optimistic outcome costs, entropy."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from scipy import special

P_FLOOR = 1e-6


@dataclass(frozen=True)
class BetaPrior:
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError(f"Beta prior needs positive parameters, got ({self.alpha}, {self.beta})")


@dataclass(frozen=True)
class OutcomeCounts:
    s: int = 0
    f: int = 0

    def __post_init__(self):
        if self.s < 0 or self.f < 0:
            raise ValueError("counts must be non-negative")


def beta_quantile(alpha: float, beta: float, q: float) -> float:
    """Inverse CDF of Beta(alpha, beta) at ``q``."""
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"quantile level must lie in [0, 1], got {q}")
    if alpha <= 0 or beta <= 0:
        raise ValueError("Beta parameters must be positive")
    if q == 0.0:
        return 0.0
    if q == 1.0:
        return 1.0
    return float(special.betaincinv(alpha, beta, q))


def ucb_level(i: int) -> float:
    if i < 1:
        raise ValueError("iteration index starts at 1")
    return 1.0 - 1.0 / (i + 1)


@lru_cache(maxsize=1 << 18)
def ucb_cost(alpha: float, beta: float, i: int) -> float:
    """-log of the optimistic success probability of Beta(alpha, beta) at iteration i."""
    p = beta_quantile(alpha, beta, ucb_level(i))
    return -math.log(max(P_FLOOR, p))


def bayes_ucb_cost(prior: BetaPrior, counts: OutcomeCounts, i: int) -> float:
    return ucb_cost(prior.alpha + counts.s, prior.beta + counts.f, i)


@lru_cache(maxsize=1 << 16)
def beta_entropy(alpha: float, beta: float) -> float:
    """Differential entropy of Beta(alpha, beta) in nats."""
    if alpha <= 0 or beta <= 0:
        raise ValueError("Beta parameters must be positive")
    psi = special.digamma
    return float(
        special.betaln(alpha, beta)
        - (alpha - 1) * psi(alpha)
        - (beta - 1) * psi(beta)
        + (alpha + beta - 2) * psi(alpha + beta)
    )
