import json
import subprocess
import sys

import pytest

from ionize.cli import main


def write(tmp_path, cfg, name="cfg.json"):
    f = tmp_path / name
    f.write_text(json.dumps(cfg))
    return str(f)


def test_bad_json_exit_2(tmp_path):
    f = tmp_path / "bad.json"
    f.write_text("{")
    assert main(["find-pole", "--config", str(f), "--out", str(tmp_path)]) == 2
    assert main(["find-pole", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 2


def test_degenerate_separation_exit_3(tmp_path):
    assert main(["find-pole", "--config", write(tmp_path, {"r": 0}), "--out", str(tmp_path)]) == 3


def test_removable_point_exit_3(tmp_path):
    cfg = write(tmp_path, {"spectral": {"p": [0.0, 1.0]}})
    assert main(["spectral-solve", "--config", cfg, "--out", str(tmp_path)]) == 3


def test_bad_threads_and_seed(tmp_path):
    assert main(["find-pole", "--threads", "0", "--out", str(tmp_path)]) == 3
    assert main(["find-pole", "--seed", "-1", "--out", str(tmp_path)]) == 3


def test_find_pole_manifest(tmp_path, capsys):
    assert main(["find-pole", "--out", str(tmp_path)]) == 0
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["command"] == "find-pole" and man["outputs"] == ["pole.json"]
    assert len(man["config_hash"]) == 64
    pole = json.loads((tmp_path / "pole.json").read_text())
    assert len(pole["lambda_roots"]) == 1
    assert json.loads(capsys.readouterr().out)["n0"] == pole["n0"]


def test_genericity_constant(tmp_path):
    cfg = write(tmp_path, {"alpha": 0.8})
    assert main(["check-genericity", "--config", cfg, "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "genericity.json").read_text())
    assert rep["residual"] == 1.0 and rep["verdict"] == "trivially nongeneric"


def test_solve_charges_reproducible(tmp_path):
    cfg = write(tmp_path, {"solve_charges": {"t_max": 2.0, "n_steps": 200}})
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["solve-charges", "--config", cfg, "--out", str(a)]) == 0
    assert main(["solve-charges", "--config", cfg, "--out", str(b)]) == 0
    assert (a / "charges.csv").read_bytes() == (b / "charges.csv").read_bytes()
    m1 = json.loads((a / "manifest.json").read_text())
    m2 = json.loads((b / "manifest.json").read_text())
    assert m1["config_hash"] == m2["config_hash"]


def test_fit_decay_from_csv(tmp_path):
    cfg = {"solve_charges": {"t_max": 20.0, "n_steps": 2000}}
    assert main(["solve-charges", "--config", write(tmp_path, cfg), "--out", str(tmp_path)]) == 0
    cfg["fit_decay"] = {"input": "charges.csv", "component": "q2", "window": [5, 20]}
    assert main(["fit-decay", "--config", write(tmp_path, cfg), "--out", str(tmp_path)]) == 0
    fit = json.loads((tmp_path / "decay_fit.json").read_text())
    assert fit["method"] == "envelope" and "pass" in fit


def test_fit_decay_short_window_exit_3(tmp_path):
    cfg = {"solve_charges": {"t_max": 2.0, "n_steps": 200}, "fit_decay": {"window": [1.9, 2.0]}}
    assert main(["fit-decay", "--config", write(tmp_path, cfg), "--out", str(tmp_path)]) == 3


def test_survival_and_ionization(tmp_path):
    cfg = {"solve_charges": {"t_max": 3.0, "n_steps": 300}, "ionization": {"R": 2.0, "dt": 1.0}}
    path = write(tmp_path, cfg)
    assert main(["survival", "--config", path, "--out", str(tmp_path)]) == 0
    assert main(["ionization", "--config", path, "--out", str(tmp_path), "--threads", "2"]) == 0
    assert (tmp_path / "survival.csv").exists() and (tmp_path / "ionization.csv").exists()


def test_validate_all_subset(tmp_path):
    cfg = write(tmp_path, {"validate": {"criteria": [7]}})
    assert main(["validate-all", "--config", cfg, "--out", str(tmp_path)]) == 0
    acc = json.loads((tmp_path / "acceptance.json").read_text())
    assert [c["number"] for c in acc] == [7] and acc[0]["pass"] is True


def test_console_script_version():
    out = subprocess.run([sys.executable, "-m", "ionize.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip()
