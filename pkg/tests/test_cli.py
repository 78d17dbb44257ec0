import json

import numpy as np
import pytest

from aqec.cli import load_config, run, UsageError


def test_help_exits_zero(capsys):
    assert run(["--help"]) == 0
    assert run(["verify-sqrt3", "--help"]) == 0
    assert "verify-sqrt3" in capsys.readouterr().out


def test_bad_invocations():
    assert run(["no-such-command"]) == 1
    assert run(["fluxonium", "--bogus"]) == 1
    assert run(["evaluate", "--record", "/nonexistent.json"]) == 1


@pytest.mark.parametrize("variant", ["1", "2"])
def test_verify_sqrt3(capsys, variant):
    assert run(["verify-sqrt3", "--variant", variant, "--cutoff", "10"]) == 0
    out = capsys.readouterr().out
    assert "hamiltonian distance  2" in out and "Knill-Laflamme" in out and "-> OK" in out


def test_discover_evaluate_round_trip(tmp_path, capsys):
    rec = tmp_path / "r.json"
    argv = ["discover", "--cutoff", "2", "--distance", "1", "--T", "0.2", "--iters", "5", "--steps-per-unit", "100",
            "--out", str(rec), "--seed", "3", "--run-record", str(tmp_path / "run.json")]
    assert run(argv) == 0
    csv = tmp_path / "f.csv"
    assert run(["evaluate", "--record", str(rec), "--tmax", "1", "--points", "5", "--csv", str(csv)]) == 0
    out = capsys.readouterr().out
    assert "diff 0.00e+00" in out
    rows = csv.read_text().splitlines()
    assert rows[0] == "t_us,fidelity,break_even" and len(rows) == 6
    run_rec = json.loads((tmp_path / "run.json").read_text())
    assert run_rec["schema_version"] == 1 and run_rec["exit_code"] == 0 and run_rec["seed"] == 3
    assert str(rec) in run_rec["outputs"] and "wall_s" in run_rec["timings"]


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "f.cfg"
    cfg.write_text("EC = 0.95\nEJ = 0.0\nel = 0.65\n")
    assert run(["fluxonium", "--config", str(cfg), "--run-record", str(tmp_path / "a.json")]) == 0
    ge = json.loads((tmp_path / "a.json").read_text())["results"]["omega_ge_ghz"]
    assert ge == pytest.approx(np.sqrt(8 * 0.95 * 0.65), abs=1e-6)
    # explicit flags win over the file
    assert run(["fluxonium", "--config", str(cfg), "--EJ", "4.75", "--run-record", str(tmp_path / "b.json")]) == 0
    ge2 = json.loads((tmp_path / "b.json").read_text())["results"]["omega_ge_ghz"]
    assert abs(ge2 - 5.43) < 0.05
    js = tmp_path / "f.json"
    js.write_text(json.dumps({"EC": 0.95, "EJ": 4.75, "EL": 0.65}))
    assert run(["fluxonium", "--config", str(js)]) == 0


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("nonsense = 3\n")
    assert run(["fluxonium", "--config", str(cfg)]) == 1
    assert "unknown config keys" in capsys.readouterr().err
    with pytest.raises(UsageError):
        load_config(tmp_path / "missing.cfg")


def test_bandwidth_and_gradcheck(tmp_path, capsys):
    csv = tmp_path / "b.csv"
    assert run(["bandwidth", "--g-ratios", "1:2:3", "--d-ratios", "1,1.5,2", "--csv", str(csv)]) == 0
    assert len(csv.read_text().splitlines()) == 10
    assert run(["bandwidth", "--g-ratios", "1:x:3"]) == 1
    assert run(["gradcheck", "--cutoff", "2", "--T", "0.03", "--n-steps", "20"]) == 0
    assert "PASS" in capsys.readouterr().out


def test_wigner_bloch_and_waveforms(tmp_path):
    w = tmp_path / "w.csv"
    assert run(["wigner", "--cutoff", "8", "--points", "5", "--csv", str(w)]) == 0
    assert len(w.read_text().splitlines()) == 26
    b = tmp_path / "b.csv"
    assert run(["bloch-map", "--cutoff", "8", "--time", "0.1", "--n-theta", "3", "--n-phi", "4", "--csv", str(b)]) == 0
    assert len(b.read_text().splitlines()) == 13
    e = tmp_path / "e.csv"
    assert run(["export-waveforms", "--tmax", "0.001", "--rate", "10000", "--csv", str(e)]) == 0
    assert e.read_text().splitlines()[0] == "t_us,eps1,eps2"
