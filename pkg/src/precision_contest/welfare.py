"""Consumer, total, planner and regulated welfare with uniform consumer tastes."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

from .demand import lambdas
from .distributions import order_statistics
from .equilibrium import Equilibrium, cartel_precision, solve_equilibrium
from .market import MarketConfig, cutoffs, prices

__all__ = [
    "ConsumerWelfare",
    "RegulatorCap",
    "WelfareReport",
    "consumer_welfare",
    "consumer_welfare_closed_form",
    "gross_welfare",
    "planner_welfare",
    "regulated_consumer_welfare",
    "regulator_cap",
    "total_welfare",
    "total_welfare_slope_at_zero",
    "unlabeled_welfare",
    "welfare_report",
]


@dataclass(frozen=True)
class ConsumerWelfare:
    wH: float
    wL: float
    wC: float
    w0: float


def _lam(cfg: MarketConfig, r: float):
    return lambdas(cfg.dist, cfg.tech, r, model=cfg.demand_model)


def consumer_welfare(cfg: MarketConfig, r: float) -> ConsumerWelfare:
    """Surplus of the high and low segments and the mass priced out.

    Tastes are uniform on ``[0, s]``, so every segment integral is a
    difference of quadratics in the cutoffs.
    """
    lam = _lam(cfg, r)
    l1, l2, s = lam.lambda1, lam.lambda2, cfg.s
    p1, p2 = prices(l1, l2, s)
    if l1 > l2:
        top, mid, low = cutoffs(l1, l2, s)
    else:
        # identical labels: any split of buyers gives the same surplus
        top, mid, low = s, 0.5 * s, 0.0

    def segment(a, b, quality, price):
        return (quality * (b * b - a * a) / 2.0 - price * (b - a)) / s

    wH = segment(mid, top, l1, p1)
    wL = segment(low, mid, l2, p2)
    w0 = low * low / (2.0 * s)
    return ConsumerWelfare(wH, wL, wH + wL, w0)


def consumer_welfare_closed_form(lambda1: float, lambda2: float, s: float) -> float:
    """Served consumer surplus in terms of the expected labelled qualities."""
    return s * lambda1**2 * (4.0 * lambda1 + 5.0 * lambda2) / (2.0 * (lambda2 - 4.0 * lambda1) ** 2)


def gross_welfare(cfg: MarketConfig, r: float) -> float:
    """Prizes plus served consumer surplus, before information costs."""
    lam = _lam(cfg, r)
    l1, th = lam.lambda1, lam.theta_hat
    return cfg.s * l1 * (11.0 * l1**2 + 3.0 * l1 * th - 2.0 * th**2) / (2.0 * (th - 5.0 * l1) ** 2)


def total_welfare(cfg: MarketConfig, theta: Sequence[float], eq: Equilibrium | None = None) -> float:
    """Firm payoffs plus served consumer surplus at the equilibrium."""
    if eq is None:
        eq = solve_equilibrium(cfg, theta)
    return eq.payoff1 + eq.payoff2 + consumer_welfare(cfg, eq.r_star).wC


def total_welfare_slope_at_zero(cfg: MarketConfig) -> float:
    """Marginal total welfare of either firm's emission at zero information."""
    return 7.0 / 18.0 * cfg.s * _lam(cfg, 0.0).dLambda1_dr - cfg.marginal_cost(0.0)


def unlabeled_welfare(cfg: MarketConfig) -> float:
    """Surplus when products are indistinguishable and priced at zero."""
    return cfg.s * cfg.dist.mean / 2.0


def planner_welfare(cfg: MarketConfig) -> float:
    """Welfare under a costless, perfectly precise label."""
    os_ = order_statistics(cfg.dist)
    e1, th = os_.e1, os_.theta_hat
    return cfg.s * e1 * (11.0 * e1**2 + 3.0 * th * e1 - 2.0 * th**2) / (2.0 * (th - 5.0 * e1) ** 2)


def regulated_consumer_welfare(cfg: MarketConfig, r: float, p1: float) -> float:
    """Consumer surplus when the low label sells at zero and the high one at ``p1``."""
    lam = _lam(cfg, r)
    gap = lam.lambda1 - lam.lambda2
    if not 0.0 <= p1 <= cfg.s * gap:
        raise ValueError(f"price {p1} outside [0, s (Lambda1 - Lambda2)]")
    return 0.5 * (cfg.s * lam.lambda1 + p1 * (p1 / (cfg.s * gap) - 2.0))


@dataclass(frozen=True)
class RegulatorCap:
    p_bar: float
    p1_market: float
    satisfied: bool


def regulator_cap(cfg: MarketConfig, r_star: float) -> RegulatorCap:
    """Highest top-label price that keeps consumers at the unlabeled surplus.

    With the second label priced at zero, consumer surplus falls in ``p1``;
    the cap is the price at which it equals the unlabeled benchmark.
    """
    if not r_star > 0:
        raise ValueError("cap needs a positive precision")
    lam = _lam(cfg, r_star)
    gap = lam.lambda1 - lam.lambda2
    under = gap * (cfg.dist.mean - lam.lambda2)
    p_bar = cfg.s * (gap - math.sqrt(max(under, 0.0)))
    p1, _ = prices(lam.lambda1, lam.lambda2, cfg.s)
    return RegulatorCap(p_bar, p1, 0.0 < p_bar < p1)


@dataclass(frozen=True)
class WelfareReport:
    wH: float
    wL: float
    wC: float
    w0: float
    wTotal: float
    wUnlabeled: float
    planner: float
    cartelPrecision: float
    regulatorCap: float

    def to_record(self) -> dict:
        return asdict(self)


def welfare_report(cfg: MarketConfig, theta: Sequence[float], eq: Equilibrium | None = None) -> WelfareReport:
    if eq is None:
        eq = solve_equilibrium(cfg, theta)
    cw = consumer_welfare(cfg, eq.r_star)
    return WelfareReport(
        wH=cw.wH, wL=cw.wL, wC=cw.wC, w0=cw.w0,
        wTotal=eq.payoff1 + eq.payoff2 + cw.wC,
        wUnlabeled=unlabeled_welfare(cfg),
        planner=planner_welfare(cfg),
        cartelPrecision=cartel_precision(cfg),
        regulatorCap=regulator_cap(cfg, eq.r_star).p_bar,
    )
