"""Quality distributions on a bounded support and their order statistics."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .quadrature import iterated_square

__all__ = [
    "DispersionCheck",
    "InvalidParameterError",
    "OrderStats",
    "QualityDistribution",
    "check_dispersion",
    "from_config",
    "integrate_ordered",
    "make_distribution",
    "order_statistics",
]

KINDS = ("uniform", "beta", "triangular", "truncated-normal")


class InvalidParameterError(ValueError):
    """A distribution or technology parameter is outside its valid range."""

    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


@dataclass(frozen=True)
class QualityDistribution:
    """Distribution ``F`` of firm qualities on ``[0, theta_bar]``.

    Instances are immutable and hashable, so they can key caches and be
    shared between sweep workers. Use :func:`make_distribution` to build one.
    """

    kind: str
    params: tuple[float, ...]
    theta_bar: float

    @cached_property
    def _rv(self):
        tb = self.theta_bar
        if self.kind == "uniform":
            return stats.uniform(loc=0.0, scale=tb)
        if self.kind == "beta":
            a, b = self.params
            return stats.beta(a, b, loc=0.0, scale=tb)
        if self.kind == "triangular":
            (c,) = self.params
            return stats.triang(c, loc=0.0, scale=tb)
        mu, sigma = self.params
        lo, hi = (0.0 - mu) / sigma, (tb - mu) / sigma
        return stats.truncnorm(lo, hi, loc=mu, scale=sigma)

    def pdf(self, theta):
        return self._rv.pdf(theta)

    def cdf(self, theta):
        return self._rv.cdf(theta)

    @property
    def mean(self) -> float:
        return float(self._rv.mean())

    @property
    def var(self) -> float:
        return float(self._rv.var())

    @property
    def std(self) -> float:
        return math.sqrt(self.var)

    def to_config(self) -> dict:
        return {"kind": self.kind, "params": list(self.params), "theta_bar": self.theta_bar}


@dataclass(frozen=True)
class OrderStats:
    """Expected maximum ``e1`` and minimum ``e2`` of two independent draws."""

    e1: float
    e2: float

    @property
    def theta_hat(self) -> float:
        return self.e1 + self.e2


@dataclass(frozen=True)
class DispersionCheck:
    ratio: float
    satisfied: bool
    order_ratio: float


def make_distribution(kind: str, params: Sequence[float] = (), theta_bar: float = 1.0) -> QualityDistribution:
    """Validate parameters and build a :class:`QualityDistribution`.

    ``params`` by family:

    * ``uniform``: none
    * ``beta``: ``[a, b]`` shape parameters (defaults restricted to [1, 2))
    * ``triangular``: ``[c]`` mode as a fraction of ``theta_bar`` (default 0.5)
    * ``truncated-normal``: ``[mu, sigma]`` in quality units
      (default mean ``theta_bar/2``, sd ``theta_bar/4``)
    """
    kind = kind.lower().replace("_", "-")
    if kind == "truncnorm":
        kind = "truncated-normal"
    if kind not in KINDS:
        raise InvalidParameterError("kind", f"unknown family {kind!r}; expected one of {KINDS}")
    theta_bar = float(theta_bar)
    if not (theta_bar > 0 and math.isfinite(theta_bar)):
        raise InvalidParameterError("theta_bar", f"support bound must be positive, got {theta_bar}")
    params = tuple(float(p) for p in params)

    if kind == "uniform":
        if params:
            raise InvalidParameterError("params", "uniform takes no parameters")
    elif kind == "beta":
        if len(params) != 2:
            raise InvalidParameterError("params", "beta needs two shape parameters [a, b]")
        if min(params) <= 0:
            raise InvalidParameterError("params", f"beta shapes must be > 0, got {params}")
        if not all(1.0 <= p < 2.0 for p in params):
            warnings.warn(
                f"beta shapes {params} outside [1, 2); the dispersion assumption may fail",
                stacklevel=2,
            )
    elif kind == "triangular":
        params = params or (0.5,)
        if len(params) != 1 or not 0.0 < params[0] < 1.0:
            raise InvalidParameterError("params", "triangular needs a mode fraction c in (0, 1)")
    else:
        params = params or (theta_bar / 2, theta_bar / 4)
        if len(params) != 2:
            raise InvalidParameterError("params", "truncated-normal needs [mu, sigma]")
        if params[1] <= 0:
            raise InvalidParameterError("params", f"sigma must be > 0, got {params[1]}")
    return QualityDistribution(kind, params, theta_bar)


def from_config(cfg: dict | None) -> QualityDistribution:
    """Build from a ``{kind, params, theta_bar}`` mapping."""
    cfg = dict(cfg or {})
    return make_distribution(
        cfg.get("kind", "uniform"), cfg.get("params", ()), cfg.get("theta_bar", 1.0)
    )


def integrate_ordered(
    dist: QualityDistribution,
    integrand: Callable[[np.ndarray, np.ndarray], np.ndarray],
    *,
    breaks: Sequence[float] = (),
    atol: float = 1e-11,
    rtol: float = 1e-11,
    coords: str = "difference",
) -> np.ndarray:
    """Integrate ``integrand(t1, t2)`` against the joint order density.

    The density is ``2 f(t1) f(t2)`` on ``t1 >= t2``. The triangle is mapped
    to the unit square through the quality difference ``x = t1 - t2`` and the
    relative position ``w = t2 / (theta_bar - x)``, so integrands that depend
    on the difference only (and kinks at fixed differences, given as
    ``breaks`` in quality units) line up with the outer axis.

    ``coords="ratio"`` instead uses the quality ratio ``z = t2 / t1`` (with
    ``z = v**3`` to absorb logarithmic behaviour at ``z = 0``) as the outer
    axis, which suits integrands that depend on ``t1 / t2``; ``breaks`` are
    ignored there.

    ``integrand`` returns an array of shape ``(*broadcast, k)``.
    """
    tb = dist.theta_bar
    if coords == "ratio":
        def on_ratio_square(v, u):
            t1 = tb * u
            t2 = t1 * v**3
            weight = 2.0 * dist.pdf(t1) * dist.pdf(t2) * tb * t1 * 3.0 * v**2
            return integrand(t1, t2) * weight[..., None]

        value, _ = iterated_square(on_ratio_square, atol=atol, rtol=rtol)
        return value
    if coords != "difference":
        raise ValueError(f"unknown coordinates {coords!r}")

    def on_square(x, w):
        diff = tb * x
        span = tb - diff
        t2 = w * span
        t1 = t2 + diff
        weight = 2.0 * dist.pdf(t1) * dist.pdf(t2) * tb * span
        vals = integrand(t1, t2)
        return vals * weight[..., None]

    points = [b / tb for b in breaks if 0.0 < b < tb]
    value, _ = iterated_square(on_square, atol=atol, rtol=rtol, outer_points=points)
    return value


@lru_cache(maxsize=64)
def order_statistics(dist: QualityDistribution) -> OrderStats:
    """Expected first and second order statistics of two i.i.d. draws."""
    value = integrate_ordered(dist, lambda t1, t2: np.stack(np.broadcast_arrays(t1, t2), axis=-1))
    return OrderStats(e1=float(value[0]), e2=float(value[1]))


def check_dispersion(dist: QualityDistribution) -> DispersionCheck:
    """Evaluate the mean-dispersion ratio ``(m + sd/sqrt 3) / (m - sd/sqrt 3)``.

    The bound is reported even when it exceeds 2 (with a warning); it is
    undefined, and an error, when ``m <= sd/sqrt 3``.
    """
    m, band = dist.mean, dist.std / math.sqrt(3.0)
    if m <= band:
        raise InvalidParameterError("params", "degenerate dispersion: mean <= sd/sqrt(3)")
    ratio = (m + band) / (m - band)
    os_ = order_statistics(dist)
    order_ratio = os_.e1 / os_.e2
    # tolerance covers the tight uniform case
    if order_ratio > ratio * (1 + 1e-9):
        raise ArithmeticError(f"order ratio {order_ratio} exceeds dispersion bound {ratio}")
    satisfied = ratio <= 2.0 + 1e-12
    if not satisfied:
        warnings.warn(f"dispersion ratio {ratio:.4f} > 2", stacklevel=2)
    return DispersionCheck(ratio=ratio, satisfied=satisfied, order_ratio=order_ratio)
