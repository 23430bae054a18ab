import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from hfujita.checks import gaussian
from hfujita.errors import ParameterError
from hfujita.fields import SmoothFunction
from hfujita.fractional import FracParams, bump, frac_sublaplacian, frac_sublaplacian_many, s_limit_trend
from hfujita.group import dil, inv, mul

A = np.array([0.3, 0.2, 0.1])


def oracle(u, a, s, c=1.0):
    """Independent route: scipy quad in the gauge radius of a dense angular average.

    At N=1, eta = (rho sqrt(cos psi) e^{i theta}, rho^2 sin psi) and
    d eta = rho^3 d rho d psi d theta.
    """
    x, wx = np.polynomial.legendre.leggauss(160)
    # psi = (pi/2) sin(pi v / 2) clusters nodes at the poles where sqrt(cos psi) has a kink
    v = x
    psi = 0.5 * math.pi * np.sin(0.5 * math.pi * v)
    wpsi = wx * 0.25 * math.pi ** 2 * np.cos(0.5 * math.pi * v)
    th = np.linspace(0, 2 * math.pi, 96, endpoint=False)
    wth = np.full(th.size, 2 * math.pi / th.size)
    P, T = np.meshgrid(psi, th, indexing="ij")
    W = np.outer(wpsi, wth)
    unit = np.stack([np.sqrt(np.cos(P)) * np.cos(T), np.sqrt(np.cos(P)) * np.sin(T), np.sin(P)], -1)
    ua = float(u(a[None, :])[0])

    def shell(rho):
        eta = unit.copy()
        eta[..., :2] *= rho
        eta[..., 2] *= rho ** 2
        diff = u(mul(a, eta)) + u(mul(a, inv(eta))) - 2 * ua
        return float(np.sum(W * diff)) * rho ** (-1 - 2 * s)

    total = 0.0
    for lo, hi in ((0, 0.5), (0.5, 2), (2, 8), (8, np.inf)):
        total += integrate.quad(shell, lo, hi, epsabs=1e-9, epsrel=1e-7, limit=400)[0]
    return -0.5 * c * total


@pytest.mark.parametrize("s", [0.3, 0.5, 0.8])
def test_matches_independent_quadrature(s):
    g = gaussian()
    got = frac_sublaplacian(g, A, FracParams(s=s))
    assert got == pytest.approx(oracle(g, A, s), rel=2e-3)


def test_annihilates_constants():
    one = SmoothFunction(lambda p: np.ones(p.shape[:-1]))
    assert abs(frac_sublaplacian(one, A, FracParams())) <= 1e-12


def test_linear_in_normalisation():
    g = gaussian()
    v1 = frac_sublaplacian(g, A, FracParams(c_Ns=1.0))
    v2 = frac_sublaplacian(g, A, FracParams(c_Ns=2.5))
    assert v2 == pytest.approx(2.5 * v1, rel=1e-13)


@settings(max_examples=8)
@given(st.floats(0.6, 1.7))
def test_dilation_homogeneity_off_rule_lattice(lam):
    # factors that are not powers of the annulus ratio exercise the quadrature
    g = gaussian()
    fp = FracParams()
    scaled = SmoothFunction(lambda p: g(dil(lam, p)))
    lhs = frac_sublaplacian(scaled, A, fp)
    rhs = lam ** (2 * fp.s) * frac_sublaplacian(g, dil(lam, A), fp)
    assert lhs == pytest.approx(rhs, rel=5e-3)


def test_left_invariance(rng):
    g = gaussian()
    c = np.array([0.4, -0.2, 0.3])
    shifted = SmoothFunction(lambda p: g(mul(c, p)))
    lhs = frac_sublaplacian(shifted, A, FracParams())
    rhs = frac_sublaplacian(g, mul(c, A), FracParams())
    assert lhs == pytest.approx(rhs, rel=2e-3)


def test_positive_at_maximum_and_negative_far():
    b = bump(radius=1.0)
    vals = frac_sublaplacian_many(b, np.array([[0.0, 0, 0], [3.0, 0, 0]]), FracParams()).value
    assert vals[0] > 0 and vals[1] < 0


def test_s_limit_trend_sign():
    g = gaussian()
    tr = s_limit_trend(g, np.zeros(3), [0.5, 0.7, 0.9, 0.95])
    # at the origin X^2 = d_x^2 and Y^2 = d_y^2, each giving -2 on exp(-|p|^2)
    assert tr.local_value == pytest.approx(4.0)
    assert tr.sign_consistent


def test_rejects_bad_s():
    with pytest.raises(ParameterError):
        FracParams(s=1.0)
