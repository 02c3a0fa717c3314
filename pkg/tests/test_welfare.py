import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from precision_contest.equilibrium import solve_equilibrium
from precision_contest.market import prices, scenario_prizes
from precision_contest.welfare import (
    consumer_welfare,
    consumer_welfare_closed_form,
    gross_welfare,
    planner_welfare,
    regulated_consumer_welfare,
    regulator_cap,
    total_welfare,
    total_welfare_slope_at_zero,
    unlabeled_welfare,
    welfare_report,
)

from conftest import THETA, reference_config


def surplus_by_quadrature(l1, l2, s, p1, p2):
    """Served surplus: average of each consumer's best option, by 1-D quadrature."""
    best = lambda mu: max(mu * l1 - p1, mu * l2 - p2, 0.0)
    val, _ = integrate.quad(best, 0.0, s, points=[p2 / l2, (p1 - p2) / (l1 - l2)], epsabs=1e-13)
    return val / s


def test_consumer_welfare_against_direct_integration(cfg):
    for r in (0.2, 1.0):
        b = scenario_prizes(cfg, r)
        cw = consumer_welfare(cfg, r)
        assert cw.wC == pytest.approx(surplus_by_quadrature(b.lambda1, b.lambda2, cfg.s, b.p1, b.p2), abs=1e-10)
        assert cw.wC == pytest.approx(consumer_welfare_closed_form(b.lambda1, b.lambda2, cfg.s), abs=1e-12)
        assert cw.w0 == pytest.approx(b.mu32**2 / (2 * cfg.s), abs=1e-14)


def test_gross_welfare_is_prizes_plus_surplus(cfg):
    for r in (0.3, 1.4):
        b = scenario_prizes(cfg, r)
        assert gross_welfare(cfg, r) == pytest.approx(b.P1 + b.P2 + consumer_welfare(cfg, r).wC, abs=1e-12)


def test_consumer_welfare_strictly_decreasing(cfg):
    w = [consumer_welfare(cfg, r).wC for r in np.linspace(0.0, 3.0, 31)]
    assert np.all(np.diff(w) < 0)


def test_total_welfare_slope_at_zero(cfg):
    h = 1e-5
    g = [gross_welfare(cfg, k * h) for k in range(3)]
    # second-order one-sided difference; costs have zero slope at zero
    fd = (-3 * g[0] + 4 * g[1] - g[2]) / (2 * h)
    assert total_welfare_slope_at_zero(cfg) == pytest.approx(fd, abs=1e-6)


def test_benchmarks(cfg):
    assert unlabeled_welfare(cfg) == pytest.approx(cfg.s / 4)
    # perfect labels reproduce gross welfare in the limit of precision
    if cfg.tech.family != "piecewise-constant":
        assert gross_welfare(cfg, 1e4) == pytest.approx(planner_welfare(cfg), rel=1e-3)
    assert planner_welfare(cfg) == pytest.approx(cfg.s * 0.299319727891, rel=1e-9)


def test_total_welfare_accounts_for_costs(cfg):
    eq = solve_equilibrium(cfg, THETA)
    cost = cfg.cost(eq.rho1) + cfg.cost(eq.rho2)
    assert total_welfare(cfg, THETA, eq) == pytest.approx(gross_welfare(cfg, eq.r_star) - cost, abs=1e-12)
    rep = welfare_report(cfg, THETA, eq)
    assert rep.wTotal == pytest.approx(total_welfare(cfg, THETA), abs=1e-12)
    assert set(rep.to_record()) >= {"wH", "wL", "wC", "w0", "wTotal", "planner", "regulatorCap"}


def test_regulator_cap_improves_on_unlabeled_market(cfg):
    eq = solve_equilibrium(cfg, THETA)
    cap = regulator_cap(cfg, eq.r_star)
    assert cap.satisfied and 0 < cap.p_bar < cap.p1_market
    assert regulated_consumer_welfare(cfg, eq.r_star, cap.p_bar) == pytest.approx(unlabeled_welfare(cfg), abs=1e-10)
    assert regulated_consumer_welfare(cfg, eq.r_star, cap.p_bar - 1e-3) > unlabeled_welfare(cfg)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 1.0))
def test_regulated_welfare_against_direct_integration(frac):
    cfg = reference_config("noise")
    r = 1.1
    b = scenario_prizes(cfg, r)
    p1 = frac * cfg.s * (b.lambda1 - b.lambda2)
    direct = integrate.quad(lambda mu: max(mu * b.lambda1 - p1, mu * b.lambda2), 0.0, cfg.s,
                            points=[p1 / (b.lambda1 - b.lambda2) + 1e-300], epsabs=1e-12)[0] / cfg.s
    assert regulated_consumer_welfare(cfg, r, p1) == pytest.approx(direct, abs=1e-9)


def test_regulated_welfare_rejects_out_of_range_price():
    cfg = reference_config("noise")
    with pytest.raises(ValueError):
        regulated_consumer_welfare(cfg, 1.0, -0.1)
    with pytest.raises(ValueError):
        regulator_cap(cfg, 0.0)
