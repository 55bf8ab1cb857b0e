import csv
import hashlib
import json

import numpy as np
import pytest

from liquidex.cli import EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC, EXIT_OK, EXIT_TOLERANCE, main
from liquidex.experiments import DEFAULTS, ConfigError, resolve_config


def write_cfg(tmp_path, cfg):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def test_defaults_fill_everything():
    cfg = resolve_config({"model": {"sigma": 0.2}})
    assert cfg["model"]["sigma"] == 0.2
    assert cfg["model"]["lam"] == DEFAULTS["model"]["lam"]
    assert cfg["sweep"]["values"] == [0.05, 0.1, 0.2, 0.4]


@pytest.mark.parametrize("bad", [{"modle": {}}, {"model": {"rho": 1}}, {"model": 3}, {"grid": {"n_steps": 1}},
                                 {"sweep": {"parameter": "T"}}, {"sweep": {"values": [0.1]}}])
def test_bad_config_rejected(bad):
    with pytest.raises(ConfigError):
        resolve_config(bad)


def test_unknown_key_exit_code(tmp_path):
    assert main(["paths", "--config", write_cfg(tmp_path, {"nope": 1}), "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_invalid_json_exit_code(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{")
    assert main(["paths", "--config", str(path), "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_paths_flag_without_meaning(tmp_path):
    assert main(["sweep", "--paths", "3", "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["paths", "--out", str(blocker / "sub")]) == EXIT_IO


def test_numeric_failure_exit_code(tmp_path):
    cfg = write_cfg(tmp_path, {"multi": {"sigma": [60.0, 80.0]}})
    assert main(["multi", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_NUMERIC


def test_tolerance_breach_exit_code(tmp_path):
    cfg = write_cfg(tmp_path, {"oracle": {"tolerance": 1e-9, "mc_paths": 0, "grid_search_points": 10001}})
    assert main(["oracle-check", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_TOLERANCE


def test_paths_output_and_manifest(tmp_path):
    out = tmp_path / "o"
    assert main(["paths", "--out", str(out), "--seed", "7"]) == EXIT_OK
    header, data = read_csv(out / "paths.csv")
    assert header[:7] == ["t_time", "W", "S_usd", "theta_usd", "u_usd_per_time", "q_shares", "q_gatheral_shares"]
    assert data[0, 3] == 1e5 and data[-1, 3] == 0.0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["master_seed"] == 7
    assert manifest["config"]["model"] == DEFAULTS["model"]
    digest = hashlib.sha256((out / "paths.csv").read_bytes()).hexdigest()
    assert manifest["files"]["paths.csv"] == digest


def test_paths_rerun_byte_identical(tmp_path):
    for name in ("a", "b"):
        assert main(["paths", "--out", str(tmp_path / name)]) == EXIT_OK
    assert (tmp_path / "a" / "paths.csv").read_bytes() == (tmp_path / "b" / "paths.csv").read_bytes()
    assert (tmp_path / "a" / "manifest.json").read_bytes() == (tmp_path / "b" / "manifest.json").read_bytes()


def test_sweeps(tmp_path):
    for param in ("kappa", "lambda", "sigma"):
        cfg = write_cfg(tmp_path, {"sweep": {"parameter": param}})
        assert main(["sweep", "--config", cfg, "--out", str(tmp_path / param)]) == EXIT_OK
    header, data = read_csv(tmp_path / "kappa" / "sweep_kappa.csv")
    assert header[0] == "kappa" and header[-1] == "det_factor"
    assert sorted(set(data[:, 0])) == [0.05, 0.2, 0.8]


def test_drift_zero_preset_reproduces_paths(tmp_path):
    assert main(["paths", "--out", str(tmp_path / "p")]) == EXIT_OK
    assert main(["drift-demo", "--out", str(tmp_path / "d")]) == EXIT_OK
    hp, paths = read_csv(tmp_path / "p" / "paths.csv")
    hd, drift = read_csv(tmp_path / "d" / "drift_zero.csv")
    for col in ("t_time", "W", "S_usd", "theta_usd", "u_usd_per_time", "q_shares"):
        np.testing.assert_array_equal(paths[:, hp.index(col)], drift[:, hd.index(col)])


def test_drift_constant_from_flat_start(tmp_path):
    cfg = write_cfg(tmp_path, {"drift": {"theta0": 0.0, "presets": ["constant"]}})
    assert main(["drift-demo", "--config", cfg, "--out", str(tmp_path / "d")]) == EXIT_OK
    h, data = read_csv(tmp_path / "d" / "drift_constant.csv")
    theta = data[:, h.index("theta_usd")]
    assert theta[0] == 0.0 and theta.max() > 0 and theta[-1] == 0.0


def test_drift_cond_exp_table(tmp_path):
    n = 10
    cfg = write_cfg(tmp_path, {"grid": {"n_steps": n},
                               "drift": {"presets": ["mean_reverting"], "cond_exp_table": [0.01] * (n + 1)}})
    assert main(["drift-demo", "--config", cfg, "--out", str(tmp_path / "d")]) == EXIT_OK
    h, data = read_csv(tmp_path / "d" / "drift_mean_reverting.csv")
    assert np.all(data[:, h.index("exp_alpha_T_per_time")] == 0.01)
    bad = write_cfg(tmp_path, {"grid": {"n_steps": n},
                               "drift": {"presets": ["mean_reverting"], "cond_exp_table": [0.01] * 3}})
    assert main(["drift-demo", "--config", bad, "--out", str(tmp_path / "e")]) == EXIT_CONFIG


def test_multi_command(tmp_path):
    cfg = write_cfg(tmp_path, {"multi": {"paths": 5}})
    assert main(["multi", "--config", cfg, "--out", str(tmp_path / "m")]) == EXIT_OK
    checks = json.loads((tmp_path / "m" / "manifest.json").read_text())["checks"]
    byname = {c["name"]: c for c in checks}
    assert byname["rho0_offdiag_max"]["passed"]
    assert byname["n1_reduction"]["passed"]
    assert byname["offdiag_sign_flips_with_rho"]["passed"]


def test_gnuplot_scripts(tmp_path):
    cfg = write_cfg(tmp_path, {"gnuplot": True})
    assert main(["paths", "--config", cfg, "--out", str(tmp_path / "g")]) == EXIT_OK
    script = (tmp_path / "g" / "paths.gp").read_text()
    assert "paths.csv" in script
