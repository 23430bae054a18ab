import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hfujita.errors import QuadratureError
from hfujita.group import Gauge, GroupParams, norm
from hfujita.measure import (angular_rule, geometric_radial_rule, monte_carlo_ball_volume,
                             polar_integrate_radial, polar_to_points, sphere_constant,
                             standard_angular_measure)

# unit Koranyi ball at N=1: vol = int 2 sqrt(1-|z|^4) dz = pi^2/2, so c_Q = Q vol = 2 pi^2
BALL_VOLUME_N1 = math.pi ** 2 / 2


def test_angular_measure_n1():
    assert math.isclose(standard_angular_measure(1), 2 * math.pi ** 2, rel_tol=1e-14)


def test_angular_rule_weights_sum_to_measure():
    for N in (1, 2):
        rule = angular_rule(N, Gauge.STANDARD, 16, 24)
        assert math.isclose(rule.weights.sum(), standard_angular_measure(N), rel_tol=1e-10)


def test_angular_nodes_on_unit_sphere():
    rule = angular_rule(1)
    assert np.allclose(norm(rule.points), 1.0, atol=1e-12)
    pts = polar_to_points([0.5, 2.0], rule)
    assert np.allclose(norm(pts[0]), 0.5) and np.allclose(norm(pts[1]), 2.0)


def test_sphere_constant_matches_closed_form():
    sc = sphere_constant(GroupParams())
    assert abs(sc.value - 2 * math.pi ** 2) <= 3 * sc.stderr + 1e-9
    assert sc.stderr < 1e-3 * sc.value


def test_polar_integral_of_quartic_gaussian():
    # c_Q int r^3 exp(-r^4) dr = c_Q / 4
    val = polar_integrate_radial(lambda r: np.exp(-r ** 4), GroupParams())
    assert math.isclose(val, 2 * math.pi ** 2 / 4, rel_tol=1e-9)


def test_polar_integral_divergence_is_reported():
    with pytest.raises(QuadratureError):
        polar_integrate_radial(lambda r: r ** -4.0, GroupParams(), lower=0.0, upper=1.0)


def test_geometric_radial_rule_integrates_polynomials():
    x, w = geometric_radial_rule(0.01, 3.0, 2.0, 6)
    assert math.isclose(np.sum(w * x ** 3), (3.0 ** 4 - 0.01 ** 4) / 4, rel_tol=1e-12)


def test_ball_volume_unit():
    vol, se = monte_carlo_ball_volume(GroupParams(), n_samples=200_000, seed=3)
    assert abs(vol - BALL_VOLUME_N1) <= 4 * se


@given(st.floats(0.3, 3.0))
def test_ball_volume_scales_like_lambda_q(lam):
    vol, se = monte_carlo_ball_volume(GroupParams(), lam=lam, n_samples=50_000, seed=1)
    target = BALL_VOLUME_N1 * lam ** 4
    assert abs(vol - target) <= 5 * se
