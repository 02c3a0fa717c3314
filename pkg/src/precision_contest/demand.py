"""Consumer expectations of the first- and second-labelled product qualities.

At precision ``r`` consumers expect the first-labelled product to have
quality ``Lambda1(r) = E[q t1 + (1 - q) t2]`` and the second-labelled one
``Lambda2(r) = E[q t2 + (1 - q) t1]``, expectations taken over the joint
order density of the two qualities. The r-derivatives of ``Lambda1`` are
``E[(t1 - t2) d^n q / dr^n]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .distributions import QualityDistribution, integrate_ordered, order_statistics
from .quadrature import gauss_kronrod
from .rankings import RankingTechnology

__all__ = [
    "BookkeepingReport",
    "DemandExpectations",
    "difference_density",
    "lambdas",
    "lambdas_batch",
    "verify_bookkeeping",
]


@dataclass(frozen=True)
class DemandExpectations:
    lambda1: float
    lambda2: float
    dLambda1_dr: float
    d2Lambda1_dr2: float

    @property
    def theta_hat(self) -> float:
        return self.lambda1 + self.lambda2


DEMAND_MODELS = ("exact", "unclamped")


def lambdas(dist: QualityDistribution, tech: RankingTechnology, r: float,
            method: str = "auto", *, model: str = "exact") -> DemandExpectations:
    """Expected labelled qualities and the first two r-derivatives of ``Lambda1``.

    Parameters
    ----------
    method
        ``"auto"`` uses closed forms where they exist (uniform qualities with
        an unclamped difference ranking, and the piecewise-constant ranking
        for any quality distribution); ``"quadrature"`` always integrates.
    model
        ``"exact"`` integrates the ranking probabilities as defined.
        ``"unclamped"`` only affects the difference ranking: consumers then
        integrate the linear rule ``1/2 + r x`` without clipping it to
        ``[0, 1]``, so for uniform qualities ``Lambda1 = tb (3 + r tb) / 6``
        at every ``r``. The two models agree while ``r tb <= 1/2``.
    """
    r = float(r)
    if r < 0:
        raise ValueError(f"precision must be non-negative, got {r}")
    if method not in ("auto", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    if model not in DEMAND_MODELS:
        raise ValueError(f"unknown demand model {model!r}; expected one of {DEMAND_MODELS}")
    unclamped = model == "unclamped" and tech.family == "difference"
    return _lambdas(dist, tech, r, method, unclamped)


@lru_cache(maxsize=4096)
def _lambdas(dist, tech, r, method, unclamped=False):
    if method == "auto":
        closed = _closed_form(dist, tech, r, unclamped)
        if closed is not None:
            return closed
    return _by_quadrature(dist, tech, r, unclamped)


def _closed_form(dist, tech, r, unclamped=False):
    if tech.family == "piecewise-constant":
        os_ = order_statistics(dist)
        spread = os_.e1 - os_.e2
        k = tech.steepness
        d = float(tech.step(r))
        den = k * r + 2.0
        return DemandExpectations(
            lambda1=os_.e2 + d * spread,
            lambda2=os_.e1 - d * spread,
            dLambda1_dr=k / den**2 * spread,
            d2Lambda1_dr2=-2.0 * k**2 / den**3 * spread,
        )
    if tech.family == "difference" and dist.kind == "uniform" and (unclamped or r * dist.theta_bar <= 0.5):
        tb = dist.theta_bar
        return DemandExpectations(
            lambda1=tb * (3.0 + r * tb) / 6.0,
            lambda2=tb * (3.0 - r * tb) / 6.0,
            dLambda1_dr=tb**2 / 6.0,
            d2Lambda1_dr2=0.0,
        )
    return None


def _linear_terms(t1, t2, r):
    x = t1 - t2
    return 0.5 + r * x, x, np.zeros(np.broadcast(x, r).shape)


def _by_quadrature(dist, tech, r, unclamped=False):
    def integrand(t1, t2):
        if unclamped:
            q, d1, d2 = _linear_terms(t1, t2, r)
        else:
            q = tech.prob(t1, t2, r)
            d1, d2 = tech._r_derivs(t1, t2, r, "right")
        x = t1 - t2
        parts = (q * t1 + (1.0 - q) * t2, q * t2 + (1.0 - q) * t1, x * d1, x * d2)
        return np.stack(np.broadcast_arrays(*parts), axis=-1)

    kink = None if unclamped else tech.clamp_break(r)
    breaks = () if kink is None else (kink,)
    vals = integrate_ordered(dist, integrand, breaks=breaks, coords=_coords(tech))
    out = [float(v) for v in vals]
    if kink is not None and kink < dist.theta_bar:
        # the clamp boundary x = 1/(2r) moves with r (Leibniz term)
        out[3] -= kink**2 / (2.0 * r * r) * difference_density(dist, kink)
    return DemandExpectations(*out)


def lambdas_batch(dist: QualityDistribution, tech: RankingTechnology, rs, *,
                  model: str = "exact") -> tuple[np.ndarray, np.ndarray]:
    """``(Lambda1, theta_hat)`` at many precisions from one shared quadrature mesh."""
    rs = np.asarray(rs, float)
    unclamped = model == "unclamped" and tech.family == "difference"
    if tech.family == "piecewise-constant" or (
            tech.family == "difference" and dist.kind == "uniform"
            and (unclamped or np.all(rs * dist.theta_bar <= 0.5))):
        lam1 = np.array([lambdas(dist, tech, r, model=model).lambda1 for r in rs])
        return lam1, np.full(rs.size, order_statistics(dist).theta_hat)
    grid = rs[None, None, :]

    def integrand(t1, t2):
        if unclamped:
            q = _linear_terms(t1[..., None], t2[..., None], grid)[0]
        else:
            q = tech.prob(t1[..., None], t2[..., None], grid)
        x = (t1 - t2)[..., None]
        return np.concatenate([t2[..., None] + q * x, (t1 + t2)[..., None]], axis=-1)

    breaks = [] if unclamped else [b for b in (tech.clamp_break(r) for r in rs) if b is not None]
    vals = integrate_ordered(dist, integrand, breaks=breaks, atol=1e-10, rtol=1e-10, coords=_coords(tech))
    return vals[:-1], np.full(rs.size, vals[-1])


def _coords(tech):
    return "ratio" if tech.family == "ratio" else "difference"


def difference_density(dist: QualityDistribution, x: float) -> float:
    """Density of the quality gap ``t1 - t2`` under the joint order density."""
    span = dist.theta_bar - x
    if span <= 0:
        return 0.0

    def f(u):
        t2 = u * span
        return 2.0 * dist.pdf(t2 + x) * dist.pdf(t2) * span

    value, _ = gauss_kronrod(f, 0.0, 1.0, atol=1e-13, rtol=1e-12)
    return float(value)


@dataclass
class BookkeepingReport:
    """Largest violation of each expectation identity over the grid.

    ``sum``: ``Lambda1 + Lambda2 - theta_hat``. ``sandwich``: the ordering
    ``e1 >= Lambda1 >= theta_hat/2 >= Lambda2 >= e2``. ``zero``: distance from
    ``theta_hat/2`` at ``r = 0``. ``slope``: negative ``dLambda1/dr``.
    ``limit``: ``e1 - Lambda1`` at the largest grid point (informational).
    """

    r_grid: np.ndarray
    violations: dict[str, float]
    tol: float

    @property
    def ok(self) -> bool:
        return all(v <= self.tol for k, v in self.violations.items() if k != "limit")


def verify_bookkeeping(dist: QualityDistribution, tech: RankingTechnology, r_grid: Sequence[float],
                       *, tol: float = 1e-7, method: str = "quadrature") -> BookkeepingReport:
    os_ = order_statistics(dist)
    half = os_.theta_hat / 2.0
    grid = np.asarray(r_grid, float)
    worst = {"sum": 0.0, "sandwich": 0.0, "zero": 0.0, "slope": 0.0, "limit": 0.0}
    for r in grid:
        lam = lambdas(dist, tech, r, method)
        worst["sum"] = max(worst["sum"], abs(lam.lambda1 + lam.lambda2 - os_.theta_hat))
        chain = (os_.e1, lam.lambda1, half, lam.lambda2, os_.e2)
        gap = max(b - a for a, b in zip(chain, chain[1:]))
        worst["sandwich"] = max(worst["sandwich"], max(gap, 0.0))
        if r == 0:
            worst["zero"] = max(worst["zero"], abs(lam.lambda1 - half), abs(lam.lambda2 - half))
        worst["slope"] = max(worst["slope"], -lam.dLambda1_dr)
    if grid.size:
        worst["limit"] = os_.e1 - lambdas(dist, tech, grid.max(), method).lambda1
    return BookkeepingReport(grid, worst, tol)
