import json
import subprocess
import sys

import numpy as np
import pytest

from casimir_si.cli import main
from casimir_si.electrostatics import synthesize_sweep
from casimir_si.pipeline import save_ensemble
from casimir_si.stats import MeasurementEnsemble


def read_csv(path):
    return np.genfromtxt(path, delimiter=",", names=True, dtype=None, encoding="utf-8")


def test_ideal_force_at_100nm(tmp_path):
    assert main(["force", "--mode", "ideal", "--grid", "100:100:1", "--out", str(tmp_path)]) == 0
    rows = np.atleast_1d(read_csv(tmp_path / "force.csv"))
    assert rows["F_pN"][0] * 1e-12 == pytest.approx(2.76e-10, rel=2e-3)


def test_full_grid_force(tmp_path):
    assert main(["force", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "force.csv")
    assert rows.size == 3164 and set(rows["provenance"]) == {"roughness_corrected"}


def test_roughness_enhances_force(tmp_path):
    out = {}
    for mode in ("rough", "smooth"):
        d = tmp_path / mode
        assert main(["force", "--mode", mode, "--grid", "62.33:62.33:1", "--out", str(d)]) == 0
        out[mode] = np.atleast_1d(read_csv(d / "force.csv"))["F_pN"][0]
    assert out["rough"] > out["smooth"]


def test_epsilon_columns(tmp_path):
    assert main(["epsilon", "--material", "gold", "silicon", "silicon_table", "--xi", "1e13:1e18:26",
                 "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "epsilon.csv")
    assert np.all(np.diff(rows["eps_gold"]) < 0)
    rel = np.abs(rows["eps_silicon"] / rows["eps_silicon_table"] - 1)
    assert rel[0] > 100 * rel[-1]


def test_epsilon_in_ev(tmp_path):
    assert main(["epsilon", "--xi", "0.01:10:4", "--freq-unit", "eV", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "epsilon.csv")
    assert rows.dtype.names[0] == "xi_eV"


def test_missing_table_exits_nonzero_and_names_path(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"silicon": {"table": "tables/si_missing.csv"}}))
    assert main(["epsilon", "--material", "silicon", "--config", str(cfg), "--out", str(tmp_path)]) != 0
    assert "si_missing.csv" in capsys.readouterr().err
    assert not (tmp_path / "epsilon.csv").exists()


def test_config_validation(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"geometry": {"R_um": -1}}))
    assert main(["force", "--config", str(cfg)]) != 0
    cfg.write_text(json.dumps({"geometry": {"radius": 1}}))
    assert main(["force", "--config", str(cfg)]) != 0
    cfg.write_text("{bad json")
    assert main(["force", "--config", str(cfg)]) != 0
    assert main(["force", "--grid", "100:50:1", "--out", str(tmp_path)]) != 0
    assert main(["force", "--grid", "a:b", "--out", str(tmp_path)]) != 0


def test_config_drives_the_run(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"geometry": {"R_um": 50.0}, "grid_nm": [100, 100, 1], "output_dir": "res"}))
    assert main(["force", "--mode", "ideal", "--config", str(cfg)]) == 0
    rows = np.atleast_1d(read_csv(tmp_path / "res" / "force.csv"))
    assert rows["F_pN"][0] == pytest.approx(275.8376 * 50 / 101.3, rel=1e-5)


def test_analyze_synthetic_is_deterministic(tmp_path):
    args = ["analyze", "--synthesize", "--seed", "4", "--n-sets", "65", "--noise-pn", "12"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b"), "--threads", "2"]) == 0
    for name in ("report.csv", "agreement.csv", "budget.csv", "theory.csv", "mean.csv", "summary.txt",
                 "differences.svg", "mean_force.svg", "relative_errors.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name
    rows = read_csv(tmp_path / "a" / "report.csv")
    assert rows.size == 3164 and np.mean(rows["within"]) >= 0.9
    summary = (tmp_path / "a" / "summary.txt").read_text()
    assert "total experimental error" in summary


def test_analyze_ensemble_file(tmp_path):
    z = 62.33 + 0.17 * np.arange(200)
    rng = np.random.default_rng(0)
    ens = MeasurementEnsemble(z * 1e-9, rng.normal(100e-12, 12e-12, (5, z.size)))
    path = tmp_path / "ens.csv"
    save_ensemble(ens, path)
    assert main(["analyze", str(path), "--no-figures", "--out", str(tmp_path / "o")]) == 0
    assert read_csv(tmp_path / "o" / "report.csv").size == 200


def test_analyze_usage_errors(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("set_id,z_nm,F_pN\n")
    assert main(["analyze", str(empty), "--out", str(tmp_path)]) != 0
    assert main(["analyze", "--out", str(tmp_path)]) != 0
    assert main(["analyze", str(empty), "--synthesize", "--out", str(tmp_path)]) != 0
    assert main(["synthesize", "--n-sets", "1", "--out", str(tmp_path)]) != 0


def test_synthesize_writes_ensemble(tmp_path):
    assert main(["synthesize", "--n-sets", "3", "--grid", "62.33:70:0.17", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "ensemble.csv")
    assert rows.size == 3 * 46


def test_calibrate(tmp_path, capsys):
    sweep = synthesize_sweep(32.1e-9, -0.114, 101.3e-6, repeats=1)
    path = tmp_path / "sweep.csv"
    sweep.save(path)
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"calibration": {"n_bootstrap": 0}}))
    assert main(["calibrate", str(path), "--config", str(cfg), "--out", str(tmp_path)]) == 0
    assert "z0 = 32.1000" in (tmp_path / "calibration.txt").read_text()
    assert main(["calibrate", str(tmp_path / "nope.csv"), "--out", str(tmp_path)]) != 0


def test_ratio(tmp_path, capsys):
    assert main(["ratio", "--grid", "62.33:300:10", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "ratio.csv")
    assert np.all(np.diff(rows["ratio"]) < 0)
    assert "decreasing" in capsys.readouterr().out
    assert (tmp_path / "ratio.svg").exists()


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "casimir_si.cli", "force", "--mode", "ideal",
                          "--grid", "100:200:50", "--out", str(tmp_path)], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    res = subprocess.run([sys.executable, "-m", "casimir_si.cli", "bogus"], capture_output=True, text=True)
    assert res.returncode != 0
