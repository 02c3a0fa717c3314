"""Nash equilibrium of the information-emission game.

Firm ``i`` picks a signed emission ``rho_i`` at cost ``(delta/2) rho_i**2``;
the label precision is ``r = |rho_1 + rho_2|`` and firm ``i`` earns
``q_i P1(r) + (1 - q_i) P2(r)`` minus its cost. Summing the first-order
conditions removes the ranking probabilities, so aggregate precision solves
``P1'(r) + P2'(r) = delta r`` whatever the qualities; the individual FOCs
then split ``r`` between the firms.

Prizes default to the market prizes of :mod:`precision_contest.market`, but
every solver accepts ``prize_fn``, a callable ``r -> bundle`` whose result
exposes ``P1, P2, dP1, dP2``, so stand-alone contests reuse the same code.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from scipy import optimize

from .demand import lambdas_batch
from .market import MarketConfig, PrizeBundle, prize_values, scenario_prizes
from .rankings import KinkError, RankingTechnology

__all__ = [
    "BracketError",
    "BoundaryWarning",
    "ConsistencyError",
    "Equilibrium",
    "ExistenceResult",
    "ThresholdResult",
    "best_response_oracle",
    "cartel_precision",
    "certify_equilibrium",
    "critical_heterogeneity",
    "critical_quality",
    "difference_affine_coefficients",
    "existence_bound",
    "foc_residuals",
    "market_prize_fn",
    "payoff",
    "solve_aggregate_precision",
    "solve_equilibrium",
    "split_information",
]

PrizeFn = Callable[[float], Any]

ROOT_XTOL = 1e-12
ROOT_RTOL = 1e-12


class BracketError(RuntimeError):
    """No sign change of the target function on the search interval."""


class ConsistencyError(RuntimeError):
    """Individual emissions do not add up to the aggregate precision."""


class BoundaryWarning(UserWarning):
    """A grid search peaked at the edge of its grid."""


def market_prize_fn(cfg: MarketConfig, *, method: str = "auto") -> PrizeFn:
    return lambda r: scenario_prizes(cfg, r, method=method)


def _find_root(f, lo, hi, *, n_scan=60, geometric=True, what="root"):
    """First sign change of ``f`` on a scan of ``[lo, hi]``, refined by Brent."""
    grid = np.geomspace(lo, hi, n_scan) if geometric else np.linspace(lo, hi, n_scan)
    prev_x, prev_f = grid[0], f(grid[0])
    if prev_f == 0:
        return float(prev_x), (float(prev_x), float(prev_x))
    for x in grid[1:]:
        fx = f(x)
        if fx == 0:
            return float(x), (float(x), float(x))
        if np.sign(fx) != np.sign(prev_f):
            root = optimize.brentq(f, prev_x, x, xtol=ROOT_XTOL, rtol=ROOT_RTOL, maxiter=200)
            return float(root), (float(prev_x), float(x))
        prev_x, prev_f = x, fx
    raise BracketError(f"no sign change for {what} on [{lo}, {hi}]")


def _bracketed_root(f, lo, hi, start=1.0, *, what="root"):
    """Root of ``f`` on ``[lo, hi]`` bracketed by doubling or halving from ``start``.

    Suited to functions with a single sign change; far cheaper than a full
    scan when each evaluation is a quadrature.
    """
    f_lo = f(lo)
    if f_lo == 0:
        return float(lo)
    x = min(max(start, lo), hi)
    fx = f(x)
    if np.sign(fx) == np.sign(f_lo):
        while np.sign(fx) == np.sign(f_lo):
            if x >= hi:
                raise BracketError(f"no sign change for {what} on [{lo}, {hi}]")
            a, x = x, min(2.0 * x, hi)
            fx = f(x)
        b = x
    else:
        b = x
        while True:
            a = max(0.5 * x, lo)
            fa = f(a)
            if np.sign(fa) == np.sign(f_lo) or a <= lo:
                break
            x = a
        b = x
    return float(optimize.brentq(f, a, b, xtol=ROOT_XTOL, rtol=ROOT_RTOL, maxiter=200))


def solve_aggregate_precision(cfg: MarketConfig, *, r_max: float = 50.0,
                              prize_fn: PrizeFn | None = None, r_min: float = 1e-6) -> float:
    """Positive root of ``P1'(r) + P2'(r) - delta r``; independent of the qualities."""
    pf = prize_fn or market_prize_fn(cfg)

    def excess(r):
        b = pf(r)
        return b.dP1 + b.dP2 - cfg.cost_delta * r

    return _bracketed_root(excess, r_min, r_max, what="aggregate precision")


def cartel_precision(cfg: MarketConfig, *, r_max: float = 50.0,
                     prize_fn: PrizeFn | None = None) -> float:
    """Joint-profit precision with a symmetric split: ``P1' + P2' = c'(r/2)``."""
    pf = prize_fn or market_prize_fn(cfg)

    def excess(r):
        b = pf(r)
        return b.dP1 + b.dP2 - cfg.marginal_cost(r / 2.0)

    return _bracketed_root(excess, 1e-6, r_max, what="cartel precision")


def _ranking_terms(tech: RankingTechnology, theta, r):
    """``(q, dq/dr, clamped)`` at precision ``r`` for firm 1."""
    t1, t2 = theta
    q = float(tech.prob(t1, t2, r))
    try:
        dq = float(tech.dq_dr(t1, t2, r))
    except KinkError:
        # exactly on a clamp boundary: fall back to the saturated side
        dq = float(tech.dq_dr(t1, t2, r, side="right"))
    clamped = tech.family == "difference" and q in (0.0, 1.0) and t1 != t2
    return q, dq, clamped


def split_information(cfg: MarketConfig, theta: Sequence[float], r_star: float, *,
                      prize_fn: PrizeFn | None = None, tol: float = 1e-6) -> tuple[float, float]:
    """Individual emissions from the two first-order conditions at ``r_star``."""
    pf = prize_fn or market_prize_fn(cfg)
    b = pf(r_star)
    q, dq, _ = _ranking_terms(cfg.tech, theta, r_star)
    gain = dq * (b.P1 - b.P2)
    rho1 = (q * b.dP1 + (1.0 - q) * b.dP2 + gain) / cfg.cost_delta
    rho2 = ((1.0 - q) * b.dP1 + q * b.dP2 - gain) / cfg.cost_delta
    if abs(rho1 + rho2 - r_star) > tol:
        raise ConsistencyError(f"rho1 + rho2 = {rho1 + rho2} differs from r* = {r_star}")
    return rho1, rho2


def payoff(cfg: MarketConfig, theta, rho_own: float, rho_other: float, firm: int = 1, *,
           prize_fn: PrizeFn | None = None) -> float:
    """Expected profit of ``firm`` (1 or 2) given both emissions."""
    pf = prize_fn or market_prize_fn(cfg)
    r = abs(rho_own + rho_other)
    b = pf(r)
    q1 = float(cfg.tech.prob(theta[0], theta[1], r))
    q = q1 if firm == 1 else 1.0 - q1
    return q * b.P1 + (1.0 - q) * b.P2 - float(cfg.cost(rho_own))


def foc_residuals(cfg: MarketConfig, theta, rho1: float, rho2: float, *,
                  prize_fn: PrizeFn | None = None) -> tuple[float, float]:
    pf = prize_fn or market_prize_fn(cfg)
    r = rho1 + rho2
    b = pf(r)
    q, dq, _ = _ranking_terms(cfg.tech, theta, r)
    gain = dq * (b.P1 - b.P2)
    res1 = q * b.dP1 + (1.0 - q) * b.dP2 + gain - cfg.marginal_cost(rho1)
    res2 = (1.0 - q) * b.dP1 + q * b.dP2 - gain - cfg.marginal_cost(rho2)
    return float(res1), float(res2)


@dataclass(frozen=True)
class ExistenceResult:
    r_su: float | None
    r_star: float
    satisfied: bool
    binding: bool


@dataclass
class Equilibrium:
    theta: tuple[float, float]
    rho1: float
    rho2: float
    r_star: float
    prize_bundle: Any
    payoff1: float
    payoff2: float
    residuals: tuple[float, float]
    flags: dict[str, Any] = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        keys = ("no_lies", "positive_payoffs", "existence")
        return all(self.flags.get(k, True) for k in keys)

    def to_record(self) -> dict:
        b = self.prize_bundle
        rec = {
            "theta1": self.theta[0], "theta2": self.theta[1],
            "rho1": self.rho1, "rho2": self.rho2, "r_star": self.r_star,
            "payoff1": self.payoff1, "payoff2": self.payoff2,
            "residual1": self.residuals[0], "residual2": self.residuals[1],
        }
        if isinstance(b, PrizeBundle):
            rec.update(b._asdict())
        else:
            rec.update({k: float(getattr(b, k)) for k in ("P1", "P2", "dP1", "dP2")})
        rec["flags"] = dict(self.flags)
        return rec


def solve_equilibrium(cfg: MarketConfig, theta: Sequence[float], *, r_max: float = 50.0,
                      prize_fn: PrizeFn | None = None, check_existence: bool = True) -> Equilibrium:
    """Aggregate precision, individual emissions, payoffs and diagnostics.

    Firms are re-indexed so that firm 1 has the higher quality; the flag
    ``reindexed`` records a swap.
    """
    t1, t2 = map(float, theta)
    reindexed = t1 < t2
    if reindexed:
        t1, t2 = t2, t1
    th = (t1, t2)
    pf = prize_fn or market_prize_fn(cfg)
    r_star = solve_aggregate_precision(cfg, r_max=r_max, prize_fn=pf)
    rho1, rho2 = split_information(cfg, th, r_star, prize_fn=pf)
    b = pf(r_star)
    q, _, clamped = _ranking_terms(cfg.tech, th, r_star)
    u1 = q * b.P1 + (1.0 - q) * b.P2 - float(cfg.cost(rho1))
    u2 = (1.0 - q) * b.P1 + q * b.P2 - float(cfg.cost(rho2))
    flags: dict[str, Any] = {
        "reindexed": reindexed,
        "clamped": clamped,
        "no_lies": rho1 > 0 and rho1 >= abs(rho2) - 1e-12,
        "positive_payoffs": u1 > 0 and u2 > 0,
    }
    if check_existence and t1 > t2:
        ex = existence_bound(cfg, th, r_star=r_star)
        flags.update(existence=ex.satisfied, r_su=ex.r_su, bound_binding=ex.binding)
    return Equilibrium(th, rho1, rho2, r_star, b, u1, u2,
                       foc_residuals(cfg, th, rho1, rho2, prize_fn=pf), flags)


def difference_affine_coefficients(cfg: MarketConfig, *, prize_fn: PrizeFn | None = None) -> tuple[float, float]:
    """Intercept and slope of ``rho1(x) = alpha + beta x`` for the difference ranking.

    With ``q = 1/2 + r x`` unclamped, the first-order condition is affine in
    the quality gap ``x``; ``rho2(x) = alpha - beta x``.
    """
    if cfg.tech.family != "difference":
        raise ValueError("affine emissions only hold for the difference ranking")
    pf = prize_fn or market_prize_fn(cfg)
    r = solve_aggregate_precision(cfg, prize_fn=pf)
    b = pf(r)
    alpha = 0.5 * (b.dP1 + b.dP2) / cfg.cost_delta
    beta = (r * (b.dP1 - b.dP2) + (b.P1 - b.P2)) / cfg.cost_delta
    return alpha, beta


def existence_bound(cfg: MarketConfig, theta: Sequence[float], *, r_star: float | None = None,
                    r_max: float = 50.0) -> ExistenceResult:
    """Root of ``r h(theta, r) = 1`` and the verdict ``r* < r_su``.

    When ``r h < 1`` on the whole interval the bound does not bind and the
    condition holds on it; ``r_su`` is then ``None``.
    """
    t1, t2 = map(float, theta)
    if not t1 > t2:
        raise ValueError("existence bound needs theta1 > theta2")
    tech = cfg.tech
    if r_star is None:
        r_star = solve_aggregate_precision(cfg, r_max=r_max)

    def excess(r):
        q = float(tech.prob(t1, t2, r))
        if q >= 1.0:
            return math.inf
        dq = float(tech.dq_dr(t1, t2, r, side="right"))
        return r * dq / (1.0 - q) - 1.0

    hi = r_max
    kink = tech.clamp_break(1.0)
    if kink is not None:
        hi = min(hi, 0.5 / (t1 - t2))
    try:
        r_su, _ = _find_root(excess, 1e-6, hi, n_scan=200, what="r h(r) = 1")
    except BracketError:
        return ExistenceResult(None, r_star, True, False)
    return ExistenceResult(r_su, r_star, r_star < r_su, True)


def best_response_oracle(cfg: MarketConfig, theta, opponent_rho: float, firm: int = 1, *,
                         grid: tuple[float, float, float] | None = None, xtol: float = 1e-7,
                         prize_fn: PrizeFn | None = None) -> float:
    """Brute-force best response: scan the payoff on a grid, refine the peak.

    ``grid`` is ``(lo, hi, step)`` in own-emission units. By default it covers
    own emissions that keep the aggregate ``rho_1 + rho_2`` in ``[0, 3]``,
    the region in which the first-order conditions are derived; pass an
    explicit grid to search elsewhere. The bracket around the best grid point
    is refined by bounded scalar minimization.
    """
    if grid is None:
        grid = (-opponent_rho, 3.0 - opponent_rho, 1e-2)
    lo, hi, step = grid
    if not hi > lo or step <= 0:
        raise ValueError(f"bad grid {grid}")
    rhos = np.linspace(lo, hi, int(round((hi - lo) / step)) + 1)
    rs = np.abs(rhos + opponent_rho)
    t1, t2 = theta
    if prize_fn is None:
        P1, P2 = _batched_prizes(cfg, rs)
    else:
        bundles = [prize_fn(r) for r in rs]
        P1 = np.array([b.P1 for b in bundles])
        P2 = np.array([b.P2 for b in bundles])
    q1 = cfg.tech.prob(t1, t2, rs)
    q = q1 if firm == 1 else 1.0 - q1
    utils = q * P1 + (1.0 - q) * P2 - cfg.cost(rhos)
    i = int(np.argmax(utils))
    if i == 0 or i == rhos.size - 1:
        warnings.warn(f"best response at grid edge rho={rhos[i]}", BoundaryWarning, stacklevel=2)
        return float(rhos[i])

    def neg(rho):
        return -payoff(cfg, theta, rho, opponent_rho, firm, prize_fn=prize_fn)

    res = optimize.minimize_scalar(neg, bounds=(rhos[i - 1], rhos[i + 1]), method="bounded",
                                   options={"xatol": xtol})
    return float(res.x)


def _batched_prizes(cfg: MarketConfig, rs: np.ndarray, chunk: int = 64):
    """Prizes at many precisions, sharing quadrature meshes in chunks."""
    uniq, inv = np.unique(rs, return_inverse=True)
    lam = np.empty(uniq.size)
    th = np.empty(uniq.size)
    for start in range(0, uniq.size, chunk):
        sl = slice(start, start + chunk)
        lam[sl], th[sl] = lambdas_batch(cfg.dist, cfg.tech, uniq[sl], model=cfg.demand_model)
    P1, P2 = prize_values(lam, th, cfg.s)
    # r = 0 is the Bertrand point, where the closed form reads 0/0 only for
    # degenerate distributions
    return np.nan_to_num(P1)[inv], np.nan_to_num(P2)[inv]


def certify_equilibrium(cfg: MarketConfig, eq: Equilibrium, *, tol: float = 1e-3,
                        prize_fn: PrizeFn | None = None, step: float = 1e-2,
                        r_span: float | None = None) -> dict:
    """Mutual best-response check of an FOC solution against the oracle.

    Each firm's deviations are searched over aggregates in ``[0, r_span]``
    (default ``max(3, 3 r*)``). ``global_gain`` reports the best payoff gain
    from a deviation that flips the sign of the aggregate, which the
    precision ``|rho_1 + rho_2|`` cannot distinguish from a positive one.
    """
    span = r_span or max(3.0, 3.0 * eq.r_star)
    out = {}
    for firm, own, other in ((1, eq.rho1, eq.rho2), (2, eq.rho2, eq.rho1)):
        g = (-other, span - other, step)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", BoundaryWarning)
            br = best_response_oracle(cfg, eq.theta, other, firm, grid=g, prize_fn=prize_fn)
        flipped = (-span - other, -other, step)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", BoundaryWarning)
            br_neg = best_response_oracle(cfg, eq.theta, other, firm, grid=flipped, prize_fn=prize_fn)
        base = payoff(cfg, eq.theta, own, other, firm, prize_fn=prize_fn)
        out[f"br{firm}"] = br
        out[f"gap{firm}"] = abs(br - own)
        out[f"global_gain{firm}"] = max(
            0.0, payoff(cfg, eq.theta, br_neg, other, firm, prize_fn=prize_fn) - base)
    out["ok"] = out["gap1"] <= tol and out["gap2"] <= tol
    return out


@dataclass(frozen=True)
class ThresholdResult:
    kind: str
    value: float
    bracket: tuple[float, float]
    residual: float
    spread: float | None = None  # quality ratio or difference at a critical quality


def _rho2_per_unit_s(cfg: MarketConfig, theta, r):
    """``rho2 * delta / s`` at precision ``r``; prizes are linear in ``s``."""
    b = scenario_prizes(cfg, r, s=1.0)
    q, dq, _ = _ranking_terms(cfg.tech, theta, r)
    return (1.0 - q) * b.dP1 + q * b.dP2 - dq * (b.P1 - b.P2)


def critical_heterogeneity(cfg: MarketConfig, theta: Sequence[float], *,
                           s_range: tuple[float, float] = (0.5, 200.0), r_max: float = 50.0) -> ThresholdResult:
    """Heterogeneity ``s`` at which the low-quality firm's emission changes sign.

    Prizes are proportional to ``s``, so the aggregate condition reads
    ``s D(r) = delta r`` with ``D = (P1' + P2')/s``: every precision
    corresponds to exactly one heterogeneity ``s(r) = delta r / D(r)``. The
    sign change is located in precision space and mapped back; the result is
    then confirmed by solving the equilibrium at that ``s`` from scratch.
    """
    t1, t2 = map(float, theta)
    if not t1 > t2:
        raise ValueError("threshold needs theta1 > theta2")
    th = (t1, t2)

    def s_of_r(r):
        b = scenario_prizes(cfg, r, s=1.0)
        return cfg.cost_delta * r / (b.dP1 + b.dP2)

    r_lo = solve_aggregate_precision(cfg.with_s(s_range[0]), r_max=r_max)
    r_hi = solve_aggregate_precision(cfg.with_s(s_range[1]), r_max=r_max)
    try:
        r_root, _ = _find_root(lambda r: _rho2_per_unit_s(cfg, th, r), r_lo, r_hi,
                               n_scan=80, what="rho2(s) = 0")
    except BracketError as exc:
        raise BracketError(f"low-quality emission keeps its sign for s in {s_range}") from exc
    s_tilde = s_of_r(r_root)
    # independent confirmation through a full re-solve at s_tilde
    eq = solve_equilibrium(cfg.with_s(s_tilde), th, r_max=r_max, check_existence=False)
    return ThresholdResult("critical-heterogeneity", float(s_tilde), tuple(s_range), float(eq.rho2))


def critical_quality(cfg: MarketConfig, theta2: float, *, lo_gap: float = 1e-4,
                     n_scan: int = 200, r_max: float = 50.0) -> ThresholdResult:
    """Quality ``theta1`` of the leader at which the follower's emission is zero."""
    tb = cfg.dist.theta_bar
    if not 0.0 < theta2 < tb:
        raise ValueError(f"theta2 must lie in (0, {tb})")
    r = solve_aggregate_precision(cfg, r_max=r_max)
    b = scenario_prizes(cfg, r)

    def rho2(t1):
        q, dq, _ = _ranking_terms(cfg.tech, (t1, theta2), r)
        return ((1.0 - q) * b.dP1 + q * b.dP2 - dq * (b.P1 - b.P2)) / cfg.cost_delta

    bracket = (theta2 + lo_gap, tb)
    try:
        root, _ = _find_root(rho2, *bracket, n_scan=n_scan, geometric=False, what="rho2(theta1) = 0")
    except BracketError as exc:
        raise BracketError(f"low-quality emission keeps its sign for theta1 in {bracket}") from exc
    spread = root / theta2 if cfg.tech.family == "ratio" else root - theta2
    return ThresholdResult("critical-quality", root, bracket, float(rho2(root)), spread)
