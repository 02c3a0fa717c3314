import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from precision_contest.distributions import (
    InvalidParameterError,
    check_dispersion,
    from_config,
    integrate_ordered,
    make_distribution,
    order_statistics,
)

from conftest import beta22


def max_min_by_cdf(dist):
    """E[max] and E[min] of two draws from the survival identities, in 1-D."""
    tb = dist.theta_bar
    e1, _ = integrate.quad(lambda t: 1.0 - dist.cdf(t) ** 2, 0.0, tb, epsabs=1e-13)
    e2, _ = integrate.quad(lambda t: (1.0 - dist.cdf(t)) ** 2, 0.0, tb, epsabs=1e-13)
    return e1, e2


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 10.0))
def test_uniform_order_statistics_scale_with_support(tb):
    os_ = order_statistics(make_distribution("uniform", (), tb))
    assert os_.e1 == pytest.approx(2 * tb / 3, rel=1e-10)
    assert os_.e2 == pytest.approx(tb / 3, rel=1e-10)
    assert os_.theta_hat == pytest.approx(tb, rel=1e-10)


def test_beta22_order_statistics_match_exact_fraction():
    os_ = order_statistics(beta22())
    assert os_.e1 == pytest.approx(22 / 35, abs=1e-10)
    assert os_.e2 == pytest.approx(13 / 35, abs=1e-10)


@pytest.mark.parametrize("kind, params, tb", [
    ("beta", (1.5, 1.2), 1.0),
    ("triangular", (0.3,), 2.0),
    ("truncated-normal", (0.4, 0.3), 1.0),
    ("uniform", (), 3.0),
])
def test_order_statistics_agree_with_one_dimensional_route(kind, params, tb):
    dist = make_distribution(kind, params, tb)
    e1, e2 = max_min_by_cdf(dist)
    os_ = order_statistics(dist)
    assert os_.e1 == pytest.approx(e1, abs=1e-9)
    assert os_.e2 == pytest.approx(e2, abs=1e-9)


def test_ratio_and_difference_coordinates_agree():
    dist = make_distribution("beta", (1.5, 1.2))
    f = lambda t1, t2: np.stack(np.broadcast_arrays(t1 * t2, np.sqrt(t1 + t2), t1 - t2), axis=-1)
    a = integrate_ordered(dist, f)
    b = integrate_ordered(dist, f, coords="ratio")
    np.testing.assert_allclose(a, b, rtol=1e-9)


def test_total_mass_of_ordered_density_is_one():
    dist = make_distribution("triangular", (0.7,), 1.5)
    mass = integrate_ordered(dist, lambda t1, t2: np.ones(np.broadcast(t1, t2).shape + (1,)))
    assert mass[0] == pytest.approx(1.0, abs=1e-10)


def test_unknown_coordinates_rejected():
    with pytest.raises(ValueError):
        integrate_ordered(make_distribution("uniform"), lambda a, b: a, coords="polar")


@pytest.mark.parametrize("kind, params, tb, field", [
    ("cauchy", (), 1.0, "kind"),
    ("uniform", (), 0.0, "theta_bar"),
    ("uniform", (), math.inf, "theta_bar"),
    ("uniform", (1.0,), 1.0, "params"),
    ("beta", (1.0,), 1.0, "params"),
    ("beta", (0.0, 1.0), 1.0, "params"),
    ("triangular", (1.2,), 1.0, "params"),
    ("truncated-normal", (0.5, -1.0), 1.0, "params"),
])
def test_invalid_parameters_name_the_field(kind, params, tb, field):
    with pytest.raises(InvalidParameterError) as info:
        make_distribution(kind, params, tb)
    assert info.value.field == field


def test_beta_shapes_outside_range_warn():
    with pytest.warns(UserWarning):
        make_distribution("beta", (3.0, 1.0))


def test_config_round_trip_and_hashable():
    dist = make_distribution("truncnorm", (0.5, 0.2), 1.0)
    again = from_config(dist.to_config())
    assert again == dist and hash(again) == hash(dist)
    assert from_config(None) == make_distribution("uniform")


def test_moments_match_scipy_frozen_distribution():
    dist = make_distribution("triangular", (0.25,), 2.0)
    mean, _ = integrate.quad(lambda t: t * dist.pdf(t), 0, 2)
    assert dist.mean == pytest.approx(mean, rel=1e-10)
    assert dist.std == pytest.approx(math.sqrt(dist.var))


def test_uniform_dispersion_is_exactly_on_the_bound():
    chk = check_dispersion(make_distribution("uniform"))
    assert chk.ratio == pytest.approx(2.0, abs=1e-12)
    assert chk.satisfied
    assert chk.order_ratio == pytest.approx(2.0, abs=1e-10)


def test_beta22_dispersion_ratio():
    chk = check_dispersion(beta22())
    # (1/2 + sd/sqrt 3) / (1/2 - sd/sqrt 3) with sd = 1/sqrt 20
    band = 1 / math.sqrt(60)
    assert chk.ratio == pytest.approx((0.5 + band) / (0.5 - band), rel=1e-12)
    assert chk.satisfied and chk.order_ratio < chk.ratio


def test_wide_dispersion_warns():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        dist = make_distribution("beta", (0.6, 1.9))
    with pytest.warns(UserWarning, match="dispersion"):
        chk = check_dispersion(dist)
    assert not chk.satisfied
