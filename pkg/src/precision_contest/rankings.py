"""Ranking technologies: probabilities that firm 1 is labelled first.

Four contest-success-function families are provided. All functions accept
numpy arrays for the qualities and broadcast; ``r`` is the aggregate
precision ``|rho_1 + rho_2|``.

``ratio``
    Tullock form ``1 / (1 + (t1/t2)**-r)``.
``difference``
    Clamped linear form ``clip(1/2 + r (t1 - t2), 0, 1)``.
``piecewise-constant``
    All-pay-like step ``d(r) = (k r + 1) / (k r + 2)`` for ``t1 > t2``, with
    ``k`` the ``steepness``.
``noise``
    Normal-noise form ``Phi(r (t1 - t2))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy import special

from .distributions import InvalidParameterError

__all__ = [
    "FAMILIES",
    "HazardRates",
    "KinkError",
    "QReport",
    "RankingTechnology",
    "RegularityReport",
    "SaturationError",
    "check_Q_properties",
    "check_regularity",
    "from_config",
    "hazard_rates",
    "make_technology",
    "rank_prob",
    "rank_prob_derivatives",
]

FAMILIES = ("ratio", "difference", "piecewise-constant", "noise")
_SQRT2PI = math.sqrt(2.0 * math.pi)


class KinkError(ValueError):
    """The ranking is not differentiable at the requested point."""


class SaturationError(ValueError):
    """The ranking probability is exactly one, so the hazard rate is undefined."""


@dataclass(frozen=True)
class RankingTechnology:
    family: str
    steepness: float = 10.0

    # -- probabilities -------------------------------------------------
    def prob(self, t1, t2, r):
        t1, t2, r = np.asarray(t1, float), np.asarray(t2, float), np.asarray(r, float)
        fam = self.family
        if fam == "ratio":
            with np.errstate(divide="ignore", invalid="ignore"):
                log_x = np.log(t1) - np.log(t2)
                kappa = r * log_x
            # t2 = 0 < t1 gives log_x = inf; r = 0 or t1 = t2 = 0 give 1/2
            kappa = np.where((r == 0) | (t1 == t2), 0.0, kappa)
            return special.expit(kappa)
        if fam == "difference":
            return np.clip(0.5 + r * (t1 - t2), 0.0, 1.0)
        if fam == "piecewise-constant":
            d = self.step(r)
            x = t1 - t2
            return np.where(x > 0, d, np.where(x < 0, 1.0 - d, 0.5))
        return special.ndtr(r * (t1 - t2))

    def step(self, r):
        """``d(r)`` of the piecewise-constant family."""
        kr = self.steepness * np.asarray(r, float)
        return (kr + 1.0) / (kr + 2.0)

    # -- derivatives in r ------------------------------------------------
    def dq_dr(self, t1, t2, r, *, side: str | None = None):
        return self._r_derivs(t1, t2, r, side)[0]

    def d2q_dr2(self, t1, t2, r, *, side: str | None = None):
        return self._r_derivs(t1, t2, r, side)[1]

    def _r_derivs(self, t1, t2, r, side=None):
        t1, t2, r = np.asarray(t1, float), np.asarray(t2, float), np.asarray(r, float)
        fam = self.family
        if fam == "ratio":
            q = self.prob(t1, t2, r)
            with np.errstate(divide="ignore", invalid="ignore"):
                log_x = np.where(t1 == t2, 0.0, np.log(t1) - np.log(t2))
                qq = q * (1.0 - q)
                d1 = np.where(qq == 0, 0.0, qq * log_x)
                d2 = np.where(qq == 0, 0.0, qq * (1.0 - 2.0 * q) * log_x**2)
            return d1, d2
        if fam == "difference":
            x = t1 - t2
            level = 0.5 + r * x
            _check_kinks(((level == 1.0) | (level == 0.0)) & (x != 0), side, "difference clamp")
            interior = (level < 1.0) & (level > 0.0)
            if side == "right":
                # moving r up pushes level away from 1/2 towards the clamp
                inside = np.where(x > 0, level < 1.0, level > 0.0)
            elif side == "left":
                inside = interior | (level == 1.0) & (x > 0) | (level == 0.0) & (x < 0)
            else:
                inside = interior
            return np.where(inside, x, 0.0), np.zeros(np.broadcast(t1, t2, r).shape)
        if fam == "piecewise-constant":
            k = self.steepness
            x = t1 - t2
            sign = np.sign(x)
            den = k * r + 2.0
            return sign * k / den**2, -sign * 2.0 * k**2 / den**3
        x = t1 - t2
        phi = np.exp(-0.5 * (r * x) ** 2) / _SQRT2PI
        return x * phi, -r * x**3 * phi

    # -- derivatives in qualities -----------------------------------------
    def dq_dtheta(self, t1, t2, r, *, side: str | None = None):
        """Partial derivatives ``(dq/dt1, dq/dt2)``."""
        t1, t2, r = np.asarray(t1, float), np.asarray(t2, float), np.asarray(r, float)
        fam = self.family
        if fam == "ratio":
            q = self.prob(t1, t2, r)
            qq = q * (1.0 - q)
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.where(qq == 0, 0.0, qq * r / t1), np.where(qq == 0, 0.0, -qq * r / t2)
        if fam == "difference":
            level = 0.5 + r * (t1 - t2)
            _check_kinks(((level == 1.0) | (level == 0.0)) & (r > 0), side, "difference clamp")
            if side is None:
                inside = (level < 1.0) & (level > 0.0)
            else:
                inside = (level < 1.0) & (level > 0.0) | ((level == 1.0) if side == "left" else (level == 0.0))
            return np.where(inside, r, 0.0), np.where(inside, -r, 0.0)
        if fam == "piecewise-constant":
            _check_kinks((t1 == t2) & (r > 0), None, "piecewise step at equal qualities")
            zero = np.zeros(np.broadcast(t1, t2, r).shape)
            return zero, zero.copy()
        phi = np.exp(-0.5 * (r * (t1 - t2)) ** 2) / _SQRT2PI
        return r * phi, -r * phi

    def clamp_break(self, r: float) -> float | None:
        """Quality difference where the ranking saturates, if any."""
        if self.family == "difference" and r > 0:
            return 0.5 / r
        return None

    def to_config(self) -> dict:
        cfg = {"family": self.family}
        if self.family == "piecewise-constant":
            cfg["steepness"] = self.steepness
        return cfg


def _check_kinks(mask, side, what):
    if side is None and np.any(mask):
        raise KinkError(f"not differentiable at the {what}; pass side='left' or 'right'")


class Derivatives(NamedTuple):
    dq_dr: float
    d2q_dr2: float
    dq_dtheta1: float
    dq_dtheta2: float


class HazardRates(NamedTuple):
    h: float
    s_rate: float


@dataclass
class RegularityReport:
    r_grid: np.ndarray
    r1: np.ndarray  # d(h + s)/dr at each grid point
    r2: np.ndarray  # dh/dt1 at each grid point
    r1_pass: np.ndarray
    r2_pass: np.ndarray

    @property
    def all_pass(self) -> bool:
        return bool(self.r1_pass.all() and self.r2_pass.all())

    @property
    def first_failure(self) -> tuple[str, float] | None:
        for name, ok in (("R1", self.r1_pass), ("R2", self.r2_pass)):
            bad = np.flatnonzero(~ok)
            if bad.size:
                return name, float(self.r_grid[bad[0]])
        return None


@dataclass
class QReport:
    verdicts: dict[str, bool]
    violations: dict[str, int] = field(default_factory=dict)

    def __getitem__(self, key: str) -> bool:
        return self.verdicts[key]


def make_technology(family: str, steepness: float | None = None) -> RankingTechnology:
    family = family.lower().replace("_", "-")
    aliases = {"tullock": "ratio", "piecewise": "piecewise-constant", "constant": "piecewise-constant",
               "lazear-rosen": "noise", "probit": "noise", "linear": "difference"}
    family = aliases.get(family, family)
    if family not in FAMILIES:
        raise InvalidParameterError("family", f"unknown ranking family {family!r}; expected one of {FAMILIES}")
    if steepness is None:
        return RankingTechnology(family)
    steepness = float(steepness)
    if not steepness > 0:
        raise InvalidParameterError("steepness", f"must be > 0, got {steepness}")
    return RankingTechnology(family, steepness)


def from_config(cfg: dict | None) -> RankingTechnology:
    cfg = dict(cfg or {})
    return make_technology(cfg.get("family", "ratio"), cfg.get("steepness"))


def rank_prob(tech: RankingTechnology, theta: Sequence[float], r: float) -> float:
    """Probability that firm 1 (quality ``theta[0]``) is ranked first."""
    if r < 0:
        raise ValueError(f"precision must be non-negative, got {r}")
    return float(tech.prob(theta[0], theta[1], r))


def rank_prob_derivatives(tech: RankingTechnology, theta, r: float, *, side: str | None = None) -> Derivatives:
    t1, t2 = theta
    d1, d2 = tech._r_derivs(t1, t2, r, side)
    g1, g2 = tech.dq_dtheta(t1, t2, r, side=side)
    return Derivatives(float(d1), float(d2), float(g1), float(g2))


def hazard_rates(tech: RankingTechnology, theta, r: float, *, side: str | None = None) -> HazardRates:
    """Hazard ``q'/(1-q)`` and success rate ``q'/q`` of the ranking."""
    q = rank_prob(tech, theta, r)
    if q >= 1.0:
        raise SaturationError(f"q = 1 at theta={tuple(theta)}, r={r}")
    dq = float(tech.dq_dr(theta[0], theta[1], r, side=side))
    return HazardRates(h=dq / (1.0 - q), s_rate=dq / q)


def _h_plus_s(tech, t1, t2, r):
    q = tech.prob(t1, t2, r)
    dq = tech.dq_dr(t1, t2, r, side="right")
    # saturated rankings give nan, which fails every comparison downstream
    with np.errstate(divide="ignore", invalid="ignore"):
        return dq / (1.0 - q) + dq / q, dq / (1.0 - q)


def check_regularity(tech: RankingTechnology, theta, r_grid, *, step: float = 1e-5,
                     tol: float = 1e-9) -> RegularityReport:
    """Probe the hazard-rate regularity conditions by central differences.

    (R1) ``d(h + s)/dr >= 0`` and (R2) ``dh/dt1 >= 0`` at every grid point.
    """
    t1, t2 = map(float, theta)
    if not t1 > t2:
        raise ValueError("regularity is probed for t1 > t2")
    r = np.asarray(r_grid, float)
    if r.size == 0 or np.any(r <= 0):
        raise ValueError("r_grid must be a non-empty list of positive precisions")
    hs_hi, _ = _h_plus_s(tech, t1, t2, r + step)
    hs_lo, _ = _h_plus_s(tech, t1, t2, r - step)
    r1 = (hs_hi - hs_lo) / (2 * step)
    dt = step * max(t1, 1.0)
    _, h_hi = _h_plus_s(tech, t1 + dt, t2, r)
    _, h_lo = _h_plus_s(tech, t1 - dt, t2, r)
    r2 = (h_hi - h_lo) / (2 * dt)
    return RegularityReport(r, r1, r2, r1 >= -tol, r2 >= -tol)


def check_Q_properties(tech: RankingTechnology, thetas=None, r_grid=None, *, theta_bar: float = 1.0,
                       local: bool = False, tol: float = 1e-10) -> QReport:
    """Numerically probe assumptions (Q1)-(Q6) on a grid.

    ``local=True`` keeps only grid points where the difference family is
    unclamped (``r |t1 - t2| < 1/2``), mirroring the local validity of that
    family.
    """
    if thetas is None:
        g = np.linspace(0.05, 0.95, 10) * theta_bar
        thetas = [(a, b) for a in g for b in g]
    if r_grid is None:
        r_grid = np.linspace(0.1, 3.0, 12)
    th = np.asarray(thetas, float)
    t1 = th[:, 0][:, None]
    t2 = th[:, 1][:, None]
    r = np.asarray(r_grid, float)[None, :]
    h = 1e-4 * theta_bar
    mask = np.ones(np.broadcast(t1, r).shape, bool)
    if local:
        # margin keeps finite-difference stencils inside the unclamped region
        mask &= r * (np.abs(t1 - t2) + 2 * h) < 0.5
    q = tech.prob(t1, t2, r)
    counts: dict[str, int] = {}

    counts["Q1"] = int(np.sum(mask & (np.abs(q + tech.prob(t2, t1, r) - 1.0) > tol)))

    up = tech.prob(t1 + h, t2, r) - tech.prob(t1 - h, t2, r)
    counts["Q2"] = int(np.sum(mask & ~(up > tol)))

    dr = 1e-4
    r_up = tech.prob(t1, t2, r + dr) - tech.prob(t1, t2, r)
    strict_r = np.where(t1 > t2, r_up > tol, np.where(t1 < t2, r_up < -tol, np.abs(r_up) <= tol))
    at_zero = np.abs(tech.prob(t1, t2, 0.0 * r) - 0.5) > tol
    counts["Q3"] = int(np.sum(mask & (~strict_r | at_zero)))

    tt = th[:, 0][:, None]
    counts["Q4"] = int(np.sum(np.abs(tech.prob(tt, tt, r) - 0.5) > tol))

    # Q5: no jumps in t1, and along each line of fixed (t2, r) the curvature
    # in t1 changes sign at most once, from convex to concave.
    ctol = 1e-9
    q5 = 0
    for b2 in np.unique(th[:, 1]):
        line = np.union1d(np.linspace(2 * h, theta_bar, 400), [b2])
        for rr in np.asarray(r_grid, float):
            keep = np.ones(line.size, bool)
            if local:
                keep = rr * (np.abs(line - b2) + 2 * h) < 0.5
            if keep.sum() < 3:
                continue
            vals = tech.prob(line, b2, rr)
            jump = np.abs(tech.prob(line + h, b2, rr) - tech.prob(line - h, b2, rr))
            smooth = np.abs(tech.prob(line + 0.5 * h, b2, rr) - tech.prob(line - 0.5 * h, b2, rr))
            # a continuous function roughly halves its increment with the step
            if np.any(keep & (jump > 1e-8) & (smooth > 0.75 * jump)):
                q5 += 1
                continue
            curv = tech.prob(line + h, b2, rr) - 2 * vals + tech.prob(line - h, b2, rr)
            signs = np.sign(np.where(np.abs(curv) <= ctol, 0.0, curv))[keep]
            signs = signs[signs != 0]
            changes = np.flatnonzero(np.diff(signs))
            if changes.size > 1 or (changes.size == 1 and signs[0] < 0):
                q5 += 1
    counts["Q5"] = q5

    curv_r = tech.prob(t1, t2, r + dr) - 2 * q + tech.prob(t1, t2, np.maximum(r - dr, 0.0))
    counts["Q6"] = int(np.sum(mask & (t1 >= t2) & (curv_r > ctol)))

    verdicts = {k: v == 0 for k, v in counts.items()}
    return QReport(verdicts, counts)
