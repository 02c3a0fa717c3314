"""Duopoly pricing with uniformly distributed consumer tastes, and the prizes.

Consumers have taste ``mu ~ U[0, s]`` and buy the labelled product that
maximizes ``mu * Lambda_k - p_k``. The first-labelled product earns prize
``P1`` (its expected revenue) and the second ``P2``. All formulas are closed
form in the expected labelled qualities; the prize derivatives are written in
terms of ``Lambda1`` and its r-derivatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, NamedTuple

import numpy as np

from .demand import DEMAND_MODELS, lambdas
from .distributions import InvalidParameterError, QualityDistribution, make_distribution
from .rankings import RankingTechnology, make_technology

__all__ = [
    "DegenerateMarketError",
    "MarketConfig",
    "PrizeBundle",
    "consumer_hazard_increasing",
    "cutoffs",
    "prices",
    "prize_values",
    "prizes",
    "scenario_prizes",
]


class DegenerateMarketError(ValueError):
    """Both labels carry the same expected quality, so cutoffs collapse."""


@dataclass(frozen=True)
class MarketConfig:
    """A full scenario: consumer heterogeneity, cost curvature, qualities, ranking."""

    s: float
    cost_delta: float = 1.0
    dist: QualityDistribution = make_distribution("uniform")
    tech: RankingTechnology = make_technology("ratio")
    demand_model: str = "exact"

    def __post_init__(self):
        if self.demand_model not in DEMAND_MODELS:
            raise InvalidParameterError("demand_model", f"expected one of {DEMAND_MODELS}")
        if not (self.s > 0 and math.isfinite(self.s)):
            raise InvalidParameterError("s", f"heterogeneity must be > 0, got {self.s}")
        if not (self.cost_delta > 0 and math.isfinite(self.cost_delta)):
            raise InvalidParameterError("cost_delta", f"must be > 0, got {self.cost_delta}")

    def cost(self, rho):
        return 0.5 * self.cost_delta * np.square(rho)

    def marginal_cost(self, rho):
        return self.cost_delta * rho

    def with_s(self, s: float) -> "MarketConfig":
        return replace(self, s=s)


class PrizeBundle(NamedTuple):
    lambda1: float
    lambda2: float
    p1: float
    p2: float
    mu10: float
    mu21: float
    mu32: float
    P1: float
    P2: float
    dP1: float
    dP2: float
    d2P1: float
    d2P2: float


def prices(lambda1: float, lambda2: float, s: float) -> tuple[float, float]:
    """Equilibrium prices of the first- and second-labelled products."""
    if lambda1 < lambda2:
        raise ValueError("expected lambda1 >= lambda2")
    den = 4.0 * lambda1 - lambda2
    gap = lambda1 - lambda2
    return 2.0 * s * lambda1 * gap / den, s * lambda2 * gap / den


def cutoffs(lambda1: float, lambda2: float, s: float) -> tuple[float, float, float]:
    """Taste cutoffs ``(s, mu21, mu32)``: top of market, high/low split, exit."""
    if lambda1 <= lambda2:
        raise DegenerateMarketError("cutoffs undefined when both labels look alike")
    den = 4.0 * lambda1 - lambda2
    return s, s * (2.0 * lambda1 - lambda2) / den, s * (lambda1 - lambda2) / den


def prize_values(lambda1, theta_hat, s):
    """Prizes ``(P1, P2)`` as functions of ``Lambda1`` and ``theta_hat = Lambda1 + Lambda2``."""
    lam, th = lambda1, theta_hat
    den = (th - 5.0 * lam) ** 2
    return (4.0 * s * lam**2 * (2.0 * lam - th) / den,
            s * (th - lam) * lam * (2.0 * lam - th) / den)


def prize_derivatives(lam, th, dlam, d2lam, s):
    """First and second r-derivatives of both prizes."""
    g = 5.0 * lam - th
    dP1 = 8.0 * s * lam * (th**2 - 3.0 * th * lam + 5.0 * lam**2) / g**3 * dlam
    dP2 = s * (th**3 - lam * (th**2 - 6.0 * th * lam + 10.0 * lam**2)) / g**3 * dlam
    g4 = g**4
    d2P1 = -8.0 * s * (th**2 * (th + 4.0 * lam) * dlam**2
                       - lam * g * (th**2 - 3.0 * th * lam + 5.0 * lam**2) * d2lam) / g4
    d2P2 = (-2.0 * s * th**2 * (7.0 * th + lam) * dlam**2
            + s * g * (th**3 - th**2 * lam + 6.0 * th * lam**2 - 10.0 * lam**3) * d2lam) / g4
    return dP1, dP2, d2P1, d2P2


def prizes(dist: QualityDistribution, tech: RankingTechnology, r: float, s: float,
           *, method: str = "auto", model: str = "exact") -> PrizeBundle:
    """Prices, cutoffs, prizes and prize derivatives at precision ``r``."""
    lam = lambdas(dist, tech, r, method, model=model)
    l1, l2 = lam.lambda1, lam.lambda2
    th = l1 + l2
    p1, p2 = prices(l1, l2, s)
    if l1 > l2:
        mu = cutoffs(l1, l2, s)
    else:
        # Bertrand limit: everyone buys at zero price
        mu = (s, 0.5 * s, 0.0)
    P1, P2 = prize_values(l1, th, s)
    dP1, dP2, d2P1, d2P2 = prize_derivatives(l1, th, lam.dLambda1_dr, lam.d2Lambda1_dr2, s)
    return PrizeBundle(l1, l2, p1, p2, *mu, P1, P2, dP1, dP2, d2P1, d2P2)


def scenario_prizes(cfg: MarketConfig, r: float, *, s: float | None = None,
                    method: str = "auto") -> PrizeBundle:
    """:func:`prizes` for a scenario, optionally at another heterogeneity."""
    return prizes(cfg.dist, cfg.tech, r, cfg.s if s is None else s, method=method,
                  model=cfg.demand_model)


def consumer_hazard_increasing(pdf: Callable, cdf: Callable, upper: float, *, n: int = 2001,
                               tol: float = 1e-10) -> bool:
    """Whether a taste density ``g`` on ``[0, upper]`` has increasing hazard ``g/(1-G)``.

    Checked on a grid that stops short of the upper end, where the hazard
    diverges.
    """
    grid = np.linspace(0.0, upper, n)[:-1]
    g = np.asarray(pdf(grid), float)
    surv = 1.0 - np.asarray(cdf(grid), float)
    hazard = g / surv
    return bool(np.all(np.diff(hazard) >= -tol * np.maximum(1.0, np.abs(hazard[1:]))))
