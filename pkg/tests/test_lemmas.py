import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import hfujita.lemmas as lm
from hfujita.errors import ParameterError
from hfujita.group import GroupParams, GroupPoint

GP = GroupParams()
CQ = 2 * math.pi ** 2


def beta_integral(m, n):
    """``int_0^inf r^m / (1 + r^n) dr``."""
    return (math.pi / n) / math.sin(math.pi * (m + 1) / n)


@pytest.fixture(scope="module")
def report():
    return lm.lemma_bounds([0.0, 1.0, 100.0], s=0.5, delta=1.0)


def row(rep, key):
    return next(r for r in rep.rows if r.constant == key)


def test_C1_at_origin_closed_form(report):
    # [DERIVED] c_Q int r^{2s-1} / (1 + r^{Q+delta}) dr
    assert row(report, "C1").values[0] == pytest.approx(CQ * beta_integral(0, 5), rel=1e-5)


def test_C1_far_asymptotics(report):
    # [DERIVED] d(xi)^{-(Q-2s)} int h for large d(xi)
    expected = 100.0 ** -3 * CQ * beta_integral(3, 5)
    assert row(report, "C1").values[2] == pytest.approx(expected, rel=0.02)


def test_C6_is_xi_independent_closed_form(report):
    vals = row(report, "C6").values
    assert vals[0] == vals[1] == vals[2]
    assert vals[0] == pytest.approx(CQ * beta_integral(6, 8.5), rel=1e-5)


def test_C1_C5_agree_and_are_stable(report):
    assert row(report, "C1").values == row(report, "C5").values
    for key in ("C1", "C2", "C5", "C6"):
        assert row(report, key).finite and row(report, key).stable
    assert report.C5_stable and math.isfinite(report.C5_envelope)


def test_C3_C4_flagged_divergent(report):
    for key in ("C3", "C4"):
        r = row(report, key)
        assert not r.finite and all(math.isinf(v) for v in r.values)
        assert r.notes and "not integrable" in r.notes[0]
    assert not report.all_finite


def test_sample_point_forms_agree():
    ig = lm.lemma_integrands(4, 0.5, 1.0)["C1"]
    a = lm.singular_integral(ig, [1.0, 0.0, 0.0]).value
    rep = lm.lemma_bounds([GroupPoint([1.0], [0.0], 0.0)])
    assert row(rep, "C1").values[0] == a
    with pytest.raises(ParameterError):
        lm.lemma_bounds([[1.0, 0.0]])


def test_exponent_values():
    assert lm.test_exponent(2.0) == 3.0
    with pytest.raises(ParameterError):
        lm.test_exponent(1.0)


@given(st.floats(0.5, 50.0), st.floats(1.05, 3.0), st.floats(0.1, 0.9))
def test_blowup_test_function_shape(T, p, s):
    phi = lm.build_test_function(T, p, s)
    origin = np.zeros((1, 3))
    assert float(phi(origin, 0.0)[0]) == pytest.approx(1.0)
    far = np.array([[1.01 * phi.support_radius, 0.0, 0.0]])
    assert float(phi.space(far)[0]) == 0.0
    assert float(phi.time(phi.final_time)) == 0.0
    ts = np.linspace(0.0, phi.final_time, 50)
    assert np.all(np.asarray(phi.dtime(ts)) <= 1e-15)


def test_young_envelope_scaling():
    # [DERIVED] exact power law T^{Q/2 - sp/(p-1)}; -1 at p=1.2, s=1/2
    a = lm.young_envelope(10.0, 1.2, 0.5)
    b = lm.young_envelope(40.0, 1.2, 0.5)
    assert b / a == pytest.approx(4.0 ** -1, rel=1e-6)


def test_subcritical_mass_bound():
    prof = lambda r: np.exp(-np.asarray(r, dtype=float) ** 4) / (math.pi ** 2 / 2)
    rep = lm.subcritical_mass_bound([10.0, 1e2, 1e3, 1e4], 1.2, 0.5, prof)
    assert rep.fitted_slope == pytest.approx(-1.0, abs=1e-6)
    assert rep.envelope_exponent == pytest.approx(-1.0)
    assert np.all(np.diff(rep.L_values) >= -1e-12)
    assert rep.L_values[-1] == pytest.approx(1.0, rel=1e-6)
    with pytest.raises(ParameterError):
        lm.subcritical_mass_bound([10.0, 100.0], 2.0, 0.5, prof)


def test_critical_mass_growth_closed_form():
    # [DERIVED] c_Q (T^{alpha/2} - 1) / alpha
    T = [1e2, 1e3, 1e4, 1e5]
    rep = lm.critical_mass_growth(2.0, T)
    np.testing.assert_allclose(rep.values, [CQ * (t - 1) / 2 for t in T], rtol=1e-9)
    assert rep.passed and abs(rep.fitted_exponent - 1.0) <= 0.05
    assert rep.values[1] / rep.values[0] == pytest.approx((1e3 - 1) / (1e2 - 1))
    with pytest.raises(ParameterError):
        lm.critical_mass_growth(4.0, T)
