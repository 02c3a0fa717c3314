"""Stand-alone precision contests with prize schedules fixed outside a market.

Two schedules are supported. Exogenous prizes do not depend on precision,
so the aggregate first-order condition forces zero net information and the
firms' emissions cancel. Monomial prizes ``P1 = alpha r**beta`` and
``P2 = P1 / gamma`` give a closed-form aggregate precision.

Any object with ``prob(t1, t2, r)`` and ``dq_dr(t1, t2, r)`` can serve as the
success function, including :class:`~precision_contest.rankings.RankingTechnology`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Protocol, Sequence

import numpy as np
from scipy import optimize

__all__ = [
    "CallableSuccess",
    "ContestDivergenceError",
    "MonomialPrizes",
    "PrizeSchedule",
    "SuccessFunction",
    "exogenous_prize_equilibrium",
    "monomial_prize_equilibrium",
]


class ContestDivergenceError(ValueError):
    """The monomial schedule has no finite aggregate precision."""


class SuccessFunction(Protocol):
    def prob(self, t1, t2, r): ...

    def dq_dr(self, t1, t2, r): ...


@dataclass(frozen=True)
class CallableSuccess:
    """Wrap two plain callables ``q(t1, t2, r)`` and ``dq/dr(t1, t2, r)``."""

    value: Callable[[float, float, float], float]
    derivative: Callable[[float, float, float], float]

    def prob(self, t1, t2, r):
        return self.value(t1, t2, r)

    def dq_dr(self, t1, t2, r):
        return self.derivative(t1, t2, r)


@dataclass(frozen=True)
class PrizeSchedule:
    """``kind="exogenous"`` uses ``P1, P2``; ``kind="monomial"`` uses ``alpha, beta, gamma``."""

    kind: str
    P1: float = 0.0
    P2: float = 0.0
    alpha: float = 1.0
    beta: float = 1.5
    gamma: float = 2.0

    def __post_init__(self):
        if self.kind == "exogenous":
            if not self.P1 >= self.P2 >= 0:
                raise ValueError("exogenous prizes need P1 >= P2 >= 0")
        elif self.kind == "monomial":
            if not (self.alpha > 0 and self.beta > 1 and self.gamma > 1):
                raise ValueError("monomial prizes need alpha > 0, beta > 1, gamma > 1")
        else:
            raise ValueError(f"unknown prize schedule {self.kind!r}")


class MonomialPrizes(NamedTuple):
    """Prize bundle at precision ``r`` for a monomial schedule."""

    P1: float
    P2: float
    dP1: float
    dP2: float

    @classmethod
    def at(cls, schedule: PrizeSchedule, r: float) -> "MonomialPrizes":
        a, b, g = schedule.alpha, schedule.beta, schedule.gamma
        top = a * r**b
        slope = a * b * r ** (b - 1.0)
        return cls(top, top / g, slope, slope / g)

    @staticmethod
    def function(schedule: PrizeSchedule) -> Callable[[float], "MonomialPrizes"]:
        return lambda r: MonomialPrizes.at(schedule, r)


def _invert_marginal_cost(marginal_cost, target, hint=1.0):
    if target == 0:
        return 0.0
    sign = math.copysign(1.0, target)
    f = lambda rho: marginal_cost(rho) - abs(target)
    hi = hint
    while f(hi) < 0:
        hi *= 2.0
        if hi > 1e12:
            raise ValueError("marginal cost never reaches the target")
    return sign * optimize.brentq(f, 0.0, hi, xtol=1e-14, rtol=1e-14)


def exogenous_prize_equilibrium(tech: SuccessFunction, theta: Sequence[float], schedule: PrizeSchedule,
                                cost: float | Callable[[float], float] = 1.0) -> tuple[float, float]:
    """Emissions when prizes ignore precision.

    The aggregate condition gives ``r* = 0``; each firm then sets marginal
    cost equal to ``q'(theta, 0) (P1 - P2)``, firm 1 raising and firm 2
    lowering precision by the same amount.

    ``cost`` is either the curvature ``delta`` of a quadratic cost or a
    marginal-cost callable ``c'(rho)`` for ``rho >= 0``.
    """
    if schedule.kind != "exogenous":
        raise ValueError("needs an exogenous prize schedule")
    t1, t2 = theta
    gain = float(tech.dq_dr(t1, t2, 0.0)) * (schedule.P1 - schedule.P2)
    if callable(cost):
        rho1 = _invert_marginal_cost(cost, gain)
    else:
        rho1 = gain / float(cost)
    return rho1, -rho1


def monomial_prize_equilibrium(tech: SuccessFunction, theta: Sequence[float], schedule: PrizeSchedule,
                               cost_delta: float = 1.0) -> tuple[float, float, float]:
    """Closed-form ``(r*, rho1, rho2)`` under monomial prizes and quadratic cost."""
    if schedule.kind != "monomial":
        raise ValueError("needs a monomial prize schedule")
    a, b, g = schedule.alpha, schedule.beta, schedule.gamma
    if b >= 2.0:
        raise ContestDivergenceError(f"beta = {b} >= 2: prize growth outpaces quadratic cost")
    r = (a * b * (g + 1.0) / (g * cost_delta)) ** (1.0 / (2.0 - b))
    t1, t2 = theta
    q = float(tech.prob(t1, t2, r))
    dq = float(tech.dq_dr(t1, t2, r))
    scale = a * r ** (b - 1.0) / (g * cost_delta)
    rho1 = scale * (b + b * (g - 1.0) * q + (g - 1.0) * r * dq)
    rho2 = scale * (b * g - b * (g - 1.0) * q - (g - 1.0) * r * dq)
    if not np.isclose(rho1 + rho2, r, rtol=1e-10, atol=1e-12):
        raise ArithmeticError(f"emissions {rho1} + {rho2} do not add up to {r}")
    return r, rho1, rho2
