from __future__ import annotations

import numpy as np
import pytest

from hostile_strip.cli import main, read_config
from hostile_strip.phase_plane import critical_half_width
from hostile_strip.reaction import theta

ALPHA = 0.25
LS = critical_half_width(ALPHA)


def _kv(text):
    return dict(line.split("=", 1) for line in text.strip().splitlines() if "=" in line)


def test_critical_width_output(capsys):
    assert main(["critical-width", "--alpha", "0.25"]) == 0
    out = _kv(capsys.readouterr().out)
    assert abs(float(out["theta"]) - theta(0.25)) < 1e-15
    assert abs(float(out["theta"]) - 0.3923748) < 5e-8
    assert float(out["routes_rel_diff"]) < 1e-6
    assert float(out["Lstar"]) == LS


def test_critical_width_rejects_half(capsys):
    assert main(["critical-width", "--alpha", "0.5"]) == 2
    err = capsys.readouterr().err
    assert err.startswith("error=domain") and "alpha must lie in (0, 1/2)" in err


def test_ell_curve_csv(tmp_path):
    path = tmp_path / "ell.csv"
    assert main(["ell-curve", "--alpha", "0.25", "--points", "50", "--out", str(path)]) == 0
    lines = path.read_text().splitlines()
    assert lines[0] == "a,v1,v2,R,r,ell"
    rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    assert rows.shape == (50, 6)
    assert rows[-1, 0] == theta(0.25)
    assert rows[-1, 5] == pytest.approx(2 * LS, abs=1e-15)


def test_ell_curve_is_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["ell-curve", "--alpha", "0.1", "--points", "20", "--out", str(a)])
    main(["ell-curve", "--alpha", "0.1", "--points", "20", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_stationary_small_below_threshold_fails(tmp_path, capsys):
    code = main(["stationary", "--alpha", "0.25", "--L", str(0.5 * LS), "--kind", "small",
                 "--out", str(tmp_path / "s.csv")])
    assert code == 2
    assert "no small profile" in capsys.readouterr().err
    assert not (tmp_path / "s.csv").exists()


@pytest.mark.parametrize("L", [0.05, 0.5 * LS, 3.0])
def test_stationary_big_always_succeeds(tmp_path, L):
    path = tmp_path / "b.csv"
    assert main(["stationary", "--alpha", "0.25", "--L", str(L), "--kind", "big",
                 "--out", str(path)]) == 0
    text = path.read_text()
    assert text.startswith("# kind=big\n# alpha=0.25\n")
    assert "\nx,v\n" in text


def test_stationary_uses_env_out_dir(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("HOSTILE_STRIP_OUT", str(tmp_path / "env"))
    assert main(["stationary", "--alpha", "0.25", "--L", str(2 * LS), "--kind", "ground"]) == 0
    assert (tmp_path / "env" / "profile_ground.csv").exists()


def test_stationary_barrier(tmp_path):
    path = tmp_path / "bar.csv"
    assert main(["stationary", "--alpha", "0.25", "--L", str(2 * LS), "--kind", "barrier",
                 "--out", str(path)]) == 0
    assert "# L_bar=" in path.read_text()


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nalpha = 0.1\npoints=30  # trailing\n")
    assert read_config(cfg) == {"alpha": "0.1", "points": "30"}
    out = tmp_path / "o.csv"
    assert main(["ell-curve", "--config", str(cfg), "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 31
    assert main(["ell-curve", "--config", str(cfg), "--points", "12", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 13
    assert out.read_text().splitlines()[-1].startswith(repr(theta(0.1))[:10])


def test_missing_alpha_is_domain_error(capsys):
    assert main(["critical-width"]) == 2


def test_simulate_reference_spreading(tmp_path, capsys):
    code = main(["simulate", "--alpha", "0.25", "--L", str(0.5 * LS), "--sigma", "0",
                 "--out-dir", str(tmp_path)])
    assert code == 0
    assert _kv(capsys.readouterr().out)["outcome"] == "Spreading"
    man = _kv((tmp_path / "manifest.txt").read_text())
    for key in ("alpha", "L", "family", "sigma", "k", "x_min", "x_max", "n", "h", "dt",
                "t_max", "steady_tol", "snapshot_every", "classify_tol", "final_time",
                "steady", "outcome", "dist_Vb", "created"):
        assert key in man
    assert man["dt"] == "0.01" and man["outcome"] == "Spreading"
    # snapshots 0: only the final field
    lines = (tmp_path / "snapshots.csv").read_text().splitlines()
    assert lines[0] == "t,x,u" and len(lines) == 1 + int(man["n"])
    assert {ln.split(",")[0] for ln in lines[1:]} == {man["final_time"]}


def test_simulate_undetermined_exit_code(tmp_path):
    code = main(["simulate", "--alpha", "0.25", "--L", str(2 * LS), "--sigma", "0",
                 "--tmax", "3", "--snapshots", "1", "--out-dir", str(tmp_path)])
    assert code == 4
    times = {ln.split(",")[0] for ln in (tmp_path / "snapshots.csv").read_text().splitlines()[1:]}
    assert times == {"0", "1", "2", "3"}


def test_simulate_rejects_unstable_dt(tmp_path, capsys):
    code = main(["simulate", "--alpha", "0.25", "--L", "1", "--dt", "5", "--out-dir", str(tmp_path)])
    assert code == 2 and "monotonicity bound" in capsys.readouterr().err


def test_threshold_bracket_failure_is_numerical(tmp_path, capsys):
    code = main(["threshold", "--alpha", "0.25", "--L", str(2 * LS), "--bracket=-1,0",
                 "--out", str(tmp_path / "t.csv")])
    assert code == 3
    assert "error=numerical type=BracketError" in capsys.readouterr().err


def test_threshold_all_spreading(tmp_path, capsys):
    path = tmp_path / "t.csv"
    assert main(["threshold", "--alpha", "0.25", "--L", str(0.5 * LS), "--bracket=-10,10",
                 "--out", str(path)]) == 0
    assert "all_spreading=true" in capsys.readouterr().out
    assert path.read_text().startswith("sigma,outcome,dist_Vs,dist_Vg,dist_Vb,final_t\n")


def test_sweep_csv(tmp_path):
    path = tmp_path / "s.csv"
    assert main(["sweep", "--alpha", "0.25", "--L-factors", "0.5", "--bracket=-10,10",
                 "--out", str(path)]) == 0
    lines = path.read_text().splitlines()
    assert lines[0] == "L,Lstar,regime,sigma_lower_lo,sigma_lower_hi,sigma_upper_lo,sigma_upper_hi"
    assert lines[1].split(",")[2] == "spreading"
