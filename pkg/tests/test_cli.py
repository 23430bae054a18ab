import json

import pytest

from hfujita.cli import EXIT_ERROR, EXIT_OK, EXIT_UNEXPECTED, main

SMALL = "R = 4.0\nn_r = 9\nn_w = 17\n"


def test_exponent(capsys, tmp_path):
    out = tmp_path / "e.json"
    assert main(["exponent", "--p", "1.2", "--out", str(out)]) == EXIT_OK
    d = json.loads(out.read_text())
    assert d["p_F"] == pytest.approx(4 / 3) and d["regime"] == "subcritical"
    assert json.loads(capsys.readouterr().out) == d


def test_mode_mismatch_is_an_error(capsys, tmp_path):
    code = main(["dichotomy", "--mode", "sub", "--p", "2.0", "--out", str(tmp_path / "r.json")])
    assert code == EXIT_ERROR
    assert "p_F" in capsys.readouterr().err


def test_missing_config_is_an_error(tmp_path):
    assert main(["solve", "--config", str(tmp_path / "none.cfg"), "--out", str(tmp_path)]) == EXIT_ERROR


def test_lemmas_flags_divergent_constants(tmp_path):
    out = tmp_path / "l.json"
    assert main(["lemmas", "--radii", "0,1", "--out", str(out)]) == EXIT_UNEXPECTED
    d = json.loads(out.read_text())
    assert d["verdict"] == "BoundViolated"


def test_solve_small_supercritical(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(SMALL + "p = 2.0\nhorizon = 1.0\nM = 0.05\n")
    out = tmp_path / "run"
    assert main(["solve", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    rep = json.loads((out / "report.json").read_text())
    assert rep["verdict"] == "GlobalConfirmedAtHorizon" and rep["certificates"]["barrier"]["passed"]
    assert (out / "series.csv").read_text().startswith("t,sup_norm,barrier_margin")
    assert (out / "checkpoint" / "meta.json").exists()
    cfg.write_text(SMALL + "p = 2.0\nhorizon = 2.0\nM = 0.05\n")
    again = tmp_path / "again"
    code = main(["solve", "--config", str(cfg), "--out", str(again), "--resume", str(out / "checkpoint")])
    assert code == EXIT_OK
    rep2 = json.loads((again / "report.json").read_text())
    assert rep2["time_series"][-1][0] == pytest.approx(2.0)
    assert rep2["provenance"]["resumed_from"].endswith("checkpoint")
