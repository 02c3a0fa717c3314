import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy import optimize, stats

from precision_contest.distributions import InvalidParameterError
from precision_contest.market import (
    DegenerateMarketError,
    MarketConfig,
    consumer_hazard_increasing,
    cutoffs,
    prices,
    prize_derivatives,
    prize_values,
    prizes,
    scenario_prizes,
)

from conftest import FAMILIES, reference_config


def shares(l1, l2, s, p1, p2):
    """Market shares under tastes U[0, s] by direct comparison of surpluses."""
    mu = np.linspace(0, s, 400001)
    u1, u2 = mu * l1 - p1, mu * l2 - p2
    buy1 = (u1 >= u2) & (u1 >= 0)
    buy2 = (u2 > u1) & (u2 >= 0)
    return buy1.mean(), buy2.mean()


def revenue(firm, l1, l2, s, p1, p2):
    """Firm revenue from the taste cutoffs of the three-way consumer choice."""
    mid = (p1 - p2) / (l1 - l2)
    if mid > p2 / l2:
        lo1, hi2, lo2 = mid, mid, p2 / l2
    else:
        # the low label is priced out; the high one serves everyone above p1 / l1
        lo1, hi2, lo2 = p1 / l1, 0.0, 0.0
    d1 = (s - min(max(lo1, 0.0), s)) / s
    d2 = (min(hi2, s) - min(lo2, s)) / s
    return p1 * d1 if firm == 1 else p2 * max(d2, 0.0)


def best_price(fun, hi):
    """Global maximizer on [0, hi]: dense scan, then bounded refinement."""
    grid = np.linspace(0.0, hi, 20001)
    vals = np.array([fun(p) for p in grid])
    i = int(np.argmax(vals))
    lo, up = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    return optimize.minimize_scalar(lambda p: -fun(p), bounds=(lo, up), method="bounded",
                                    options={"xatol": 1e-12}).x


@settings(max_examples=20, deadline=None)
@given(st.floats(0.3, 1.0), st.floats(0.05, 0.95), st.floats(0.5, 50.0))
def test_prices_are_mutual_best_responses(l1, frac, s):
    l2 = l1 * frac
    assume(l1 - l2 > 1e-3)
    p1, p2 = prices(l1, l2, s)
    br1 = best_price(lambda p: revenue(1, l1, l2, s, p, p2), s * l1)
    br2 = best_price(lambda p: revenue(2, l1, l2, s, p1, p), s * l2)
    assert br1 == pytest.approx(p1, abs=1e-6 * s)
    assert br2 == pytest.approx(p2, abs=1e-6 * s)


def test_cutoffs_agree_with_simulated_consumer_choice():
    l1, l2, s = 0.6, 0.4, 10.0
    p1, p2 = prices(l1, l2, s)
    top, mid, low = cutoffs(l1, l2, s)
    assert top == s
    assert mid == pytest.approx((p1 - p2) / (l1 - l2))
    assert low == pytest.approx(p2 / l2)
    sh1, sh2 = shares(l1, l2, s, p1, p2)
    assert sh1 == pytest.approx((s - mid) / s, abs=1e-5)
    assert sh2 == pytest.approx((mid - low) / s, abs=1e-5)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.3, 1.0), st.floats(0.05, 0.95), st.floats(0.5, 50.0))
def test_prizes_are_price_times_share(l1, frac, s):
    l2 = l1 * frac
    p1, p2 = prices(l1, l2, s)
    top, mid, low = cutoffs(l1, l2, s)
    P1, P2 = prize_values(l1, l1 + l2, s)
    assert P1 == pytest.approx(p1 * (top - mid) / s, rel=1e-10)
    assert P2 == pytest.approx(p2 * (mid - low) / s, rel=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.3, 0.9), st.floats(0.1, 1.0), st.floats(-0.2, 0.2), st.floats(1.0, 30.0))
def test_prize_derivatives_by_chain_rule(th, slope, curv, s):
    """Prize derivatives along an arbitrary quadratic path of Lambda1."""
    lam0 = 0.5 * th + 0.05
    path = lambda r: lam0 + slope * r + 0.5 * curv * r * r
    assume(lam0 < th)
    d = prize_derivatives(lam0, th, slope, curv, s)
    for k, idx in ((0, 0), (1, 1)):
        h = 1e-5
        val = lambda r: prize_values(path(r), th, s)[k]
        assert d[idx] == pytest.approx((val(h) - val(-h)) / (2 * h), rel=1e-6, abs=1e-9)
        assert d[idx + 2] == pytest.approx((val(1e-3) - 2 * val(0) + val(-1e-3)) / 1e-6, rel=1e-4, abs=1e-6)


def test_prize_derivatives_against_finite_differences_in_r(cfg):
    h = 1e-5
    for r in (0.1, 0.4, 0.9, 2.0):
        b, up, dn = (scenario_prizes(cfg, x) for x in (r, r + h, r - h))
        assert b.dP1 == pytest.approx((up.P1 - dn.P1) / (2 * h), rel=1e-6)
        assert b.dP2 == pytest.approx((up.P2 - dn.P2) / (2 * h), rel=1e-6)
        assert b.d2P1 == pytest.approx((up.dP1 - dn.dP1) / (2 * h), rel=1e-5)
        assert b.d2P2 == pytest.approx((up.dP2 - dn.dP2) / (2 * h), rel=1e-5)


def test_prize_sign_pattern_on_grid(cfg):
    for r in np.linspace(0.02, 3.0, 25):
        b = scenario_prizes(cfg, r)
        assert b.P1 > b.P2 > 0
        assert b.dP1 > b.dP2 > 0
        assert b.d2P1 < b.d2P2 < 0


def test_bertrand_point_at_zero_precision(cfg):
    b = scenario_prizes(cfg, 0.0)
    assert b.p1 == b.p2 == 0.0
    assert b.P1 == pytest.approx(0.0, abs=1e-14) and b.P2 == pytest.approx(0.0, abs=1e-14)
    assert (b.mu10, b.mu21, b.mu32) == (cfg.s, 0.5 * cfg.s, 0.0)


def test_prizes_scale_linearly_with_heterogeneity():
    cfg = reference_config("noise")
    a = scenario_prizes(cfg, 0.8, s=1.0)
    b = scenario_prizes(cfg, 0.8)
    for f in ("P1", "P2", "dP1", "dP2", "d2P1", "d2P2", "p1", "p2"):
        assert getattr(b, f) == pytest.approx(cfg.s * getattr(a, f), rel=1e-12)
    c = prizes(cfg.dist, cfg.tech, 0.8, cfg.s)
    assert c == b


def test_degenerate_and_inverted_labels():
    with pytest.raises(DegenerateMarketError):
        cutoffs(0.5, 0.5, 1.0)
    with pytest.raises(ValueError):
        prices(0.3, 0.5, 1.0)


def test_config_validation():
    with pytest.raises(InvalidParameterError):
        reference_config("ratio", s=0.0)
    with pytest.raises(InvalidParameterError):
        reference_config("ratio", cost_delta=-1.0)
    with pytest.raises(InvalidParameterError):
        reference_config("ratio", demand_model="other")
    cfg = reference_config("ratio")
    assert cfg.with_s(2.0).s == 2.0 and cfg.s == 30.0
    assert cfg.cost(2.0) == 2.0 and cfg.marginal_cost(2.0) == 2.0


def test_consumer_hazard_check():
    assert consumer_hazard_increasing(lambda m: np.full_like(m, 0.1), lambda m: m / 10, 10.0)
    rv = stats.truncexpon(b=4.0)
    assert consumer_hazard_increasing(rv.pdf, rv.cdf, 4.0)
    # a density piling up at the bottom has falling hazard
    dec = stats.beta(0.5, 3.0)
    assert not consumer_hazard_increasing(dec.pdf, dec.cdf, 1.0)
