import csv
import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hfujita.errors import ConstraintError, ParameterError
from hfujita.experiments import (BarrierConstants, ExperimentReport, FujitaConfig, Mode, Verdict,
                                 barrier_check, check_mode, exponent_gap, fujita_exponent, paper_data,
                                 run_dichotomy, unit_bump_profile)
from hfujita.grid import GridFunction, GridSpec
from hfujita.group import GroupParams
from hfujita.solver import SolutionTrajectory

GP = GroupParams()
SMALL = dict(R=4.0, n_r=9, n_w=17)


def test_fujita_exponent_value():
    # [TRIVIAL] Q/(Q-2s) = 4/3 at N=1, s=1/2
    assert fujita_exponent(GP, 0.5) == pytest.approx(4 / 3, rel=1e-15)


def test_exponent_gap_examples():
    assert exponent_gap(1.2, GP, 0.5) == pytest.approx(-1.0, abs=1e-12)
    assert exponent_gap(2.0, GP, 0.5) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ParameterError):
        exponent_gap(1.0, GP, 0.5)


@given(st.integers(1, 3), st.floats(0.05, 0.95))
def test_gap_vanishes_at_fujita_exponent(N, s):
    # the rounded p_F carries a true gap of its own; the function adds at most 1e-14 to it
    gp = GroupParams(N)
    p = fujita_exponent(gp, s)
    exact = Fraction(gp.Q, 2) - Fraction(s) * Fraction(p) / (Fraction(p) - 1)
    assert abs(exponent_gap(p, gp, s) - float(exact)) <= 1e-14


def test_gap_at_fujita_exponent_desk_scale():
    assert abs(exponent_gap(fujita_exponent(GP, 0.5), GP, 0.5)) <= 1e-15


@given(st.integers(1, 3), st.fractions(Fraction(1, 20), Fraction(19, 20), max_denominator=40),
       st.fractions(Fraction(21, 20), Fraction(5), max_denominator=40))
def test_gap_sign_trichotomy(N, s, p):
    # [DERIVED] exact rational oracle for the sign of Q/2 - sp/(p-1)
    gp = GroupParams(N)
    exact = Fraction(gp.Q, 2) - s * p / (p - 1)
    gap = exponent_gap(float(p), gp, float(s))
    if exact != 0:
        assert np.sign(gap) == np.sign(float(exact))


def test_config_text_roundtrip():
    cfg = FujitaConfig(p=1.7, M=0.5, n_r=11, data="bump")
    back = FujitaConfig.from_text(cfg.to_text())
    assert back == cfg
    parsed = FujitaConfig.from_text("# comment\np = 2.5  # trailing\nc_Ns = none\nsubsteps = 3\n")
    assert parsed.p == 2.5 and parsed.c_Ns is None and parsed.substeps == 3


@pytest.mark.parametrize("text", ["bogus = 1", "p 2", "p = 0.5", "data = other"])
def test_config_errors(text):
    with pytest.raises(ParameterError):
        FujitaConfig.from_text(text)


def test_default_rate_is_unit_radial():
    assert FujitaConfig().rate == pytest.approx(1 / (2 * math.pi ** 2), rel=1e-12)


def test_paper_data_values():
    cfg = FujitaConfig(**SMALL)
    u0, f = paper_data(cfg)
    r0 = 0
    w0 = int(np.argmin(np.abs(u0.spec.w_nodes)))
    assert u0.values[r0, w0] == 0.0
    assert f.values[r0, w0] == pytest.approx(cfg.epsilon)
    d = u0.spec.gauge()
    k = np.unravel_index(np.argmin(np.abs(d - 1.0)), d.shape)
    if abs(d[k] - 1.0) < 1e-12:
        assert f.values[k] == pytest.approx(cfg.epsilon / 2)
        assert u0.values[k] == pytest.approx(cfg.epsilon / 2)
    assert f.tail.beta == 5.0 and u0.tail.beta == pytest.approx(5.5)


def test_paper_data_decay_condition():
    with pytest.raises(ConstraintError):
        paper_data(FujitaConfig(p=1.5, **SMALL))


def test_unit_bump_has_unit_mass():
    from scipy import integrate
    g = unit_bump_profile(GP)
    val = 2 * math.pi ** 2 * integrate.quad(lambda r: r ** 3 * g(r), 0, np.inf)[0]
    assert val == pytest.approx(1.0, rel=1e-10)


def test_mode_mismatch_quotes_fujita_exponent():
    with pytest.raises(ConstraintError, match="p_F"):
        check_mode(FujitaConfig(p=2.0), Mode.SUBCRITICAL)
    with pytest.raises(ConstraintError):
        run_dichotomy(FujitaConfig(p=1.2), "crit")
    check_mode(FujitaConfig(p=4 / 3), Mode.CRITICAL)


def _traj(spec, arrays):
    states = [GridFunction(spec, a, GridFunction.fit_tail(spec, a, 3.0)) for a in arrays]
    return SolutionTrajectory(list(range(len(states))), states, [g.sup_norm for g in states])


def test_barrier_check_zero_trajectory():
    spec = GridSpec.build(4.0, 9, 17)
    rep = barrier_check(_traj(spec, [np.zeros(spec.shape)] * 3), 1.0, GP, 0.5)
    assert rep.passed and rep.worst_margin == 0.0 and rep.n_violations == 0


def test_barrier_check_names_violation():
    spec = GridSpec.build(4.0, 9, 17)
    bad = np.zeros(spec.shape)
    bad[2, 8] = 2.0
    rep = barrier_check(_traj(spec, [np.zeros(spec.shape), bad]), 1.0, GP, 0.5)
    assert not rep.passed and rep.n_violations == 1
    assert rep.worst_node["index"] == [2, 8] and rep.worst_time == 1
    assert f"r={spec.r_nodes[2]:.4g}" in rep.detail


def test_smallest_M_solves_fixed_point():
    bc = BarrierConstants(1.0, 1.3, 1.0)
    M = bc.smallest_M(0.01, 2.0)
    assert M - bc.C ** 2 * M ** 2 - bc.C * 0.01 == pytest.approx(0.0, abs=1e-12)


def test_report_json_and_csv(tmp_path):
    rep = ExperimentReport("x", {"a": np.float64(1.0)}, Verdict.BLOW_UP.value, {}, Verdict.BLOW_UP.value)
    rep.measure("t_blowup", np.float64(2.5), 0.1)
    rep.time_series = [(0.0, 1.0, None), (1.0, 2.0, 0.5)]
    d = json.loads(rep.to_json(tmp_path / "r.json"))
    assert d["as_expected"] and d["measured"]["t_blowup"] == {"value": 2.5, "error": 0.1}
    rep.write_csv(tmp_path / "s.csv")
    rows = list(csv.reader(open(tmp_path / "s.csv")))
    assert rows[0] == ["t", "sup_norm", "barrier_margin"] and rows[1][2] == ""


def test_critical_mode_small_grid():
    cfg = FujitaConfig(p=4 / 3, exploratory_horizon=0.5, **SMALL)
    rep = run_dichotomy(cfg, "crit")
    assert rep.verdict == Verdict.NO_GLOBAL.value and rep.as_expected
    assert rep.measured["growth_exponent"]["value"] == pytest.approx(1.0, abs=0.05)
    assert rep.provenance["c_Ns"] == pytest.approx(1 / (2 * math.pi ** 2))
