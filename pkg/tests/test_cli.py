import csv
import json
import subprocess
import sys

import pytest

from lpbaire.cli import RunManifest, main
from lpbaire.step_functions import RationalStepFunction


def _fn(tmp_path):
    path = tmp_path / "f.json"
    f = RationalStepFunction.from_pieces((0, "1/2", "3/2", 2), (1, -2, "1/3"))
    path.write_text(json.dumps(f.to_json()))
    return path


def test_selftest_and_manifest(tmp_path):
    out = tmp_path / "st.json"
    assert main(["--jobs", "2", "selftest", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    man = json.loads((tmp_path / "st.json.manifest.json").read_text())
    assert man["status"] == "ok" and man["command"] == "selftest"
    assert list(man["outputs"]) == [str(out)]
    assert report


def test_kolmogorov_build(tmp_path):
    out = tmp_path / "p.json"
    assert main(["kolmogorov", "build", "-n", "4", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["freqs"] == [256, 517, 1039, 2083]


def test_usage_errors_exit_2(tmp_path, capsys):
    assert main(["kolmogorov", "build", "-n", "4", "--bogus"]) == 2
    assert main(["game", "run", "--alpha", "nonsense", "--out", str(tmp_path / "t.json")]) == 2
    assert main([]) == 2


def test_domain_error_exit_1(tmp_path, capsys):
    capsys.readouterr()
    assert main(["kolmogorov", "build", "-n", "1", "--out", str(tmp_path / "p.json")]) == 1
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert set(err) == {"error", "message"}


def test_partial_sums_csv(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["fourier", "partial-sums", "--fn", str(_fn(tmp_path)), "-l", "8", "--grid", "64",
                 "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["x_over_pi", "S_l_lo", "S_l_hi"] and len(rows) == 65
    assert all(float(lo) <= float(hi) for _, lo, hi in rows[1:])


def test_coeffs_and_avoid(tmp_path):
    fn = _fn(tmp_path)
    assert main(["fourier", "coeffs", "--fn", str(fn), "-L", "4", "--out", str(tmp_path / "c.json")]) == 0
    assert main(["avoid-singleton", "--fn", str(fn), "--out", str(tmp_path / "a.json")]) == 0


def test_config_from_env(tmp_path, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"grid": 256}))
    monkeypatch.setenv("LPBAIRE_CONFIG", str(cfg))
    out = tmp_path / "r.json"
    assert main(["kolmogorov", "verify", "-n", "8", "--A", "1/8", "--out", str(out)]) == 0
    man = json.loads((tmp_path / "r.json.manifest.json").read_text())
    assert man["config"]["grid"] == 256
    cfg.write_text(json.dumps({"nope": 1}))
    assert main(["kolmogorov", "verify", "-n", "8", "--out", str(out)]) == 2


def test_game_and_diverge(tmp_path):
    assert main(["game", "run", "--rounds", "3", "--out", str(tmp_path / "g.json")]) == 0
    out = tmp_path / "d.json"
    assert main(["diverge", "demo", "--rounds", "2", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["containment_ok"]
    assert (tmp_path / "d.csv").exists()
    assert main(["diverge", "demo", "--rounds", "2", "--policy", "full", "--out", str(out)]) == 1


def test_rerun_identical_manifest(tmp_path):
    out = tmp_path / "p.json"
    docs = []
    for _ in range(2):
        assert main(["kolmogorov", "build", "-n", "3", "--out", str(out)]) == 0
        docs.append(RunManifest.strip_timestamps(json.loads((tmp_path / "p.json.manifest.json").read_text())))
    assert docs[0] == docs[1]
    assert list(docs[0]["outputs"]) == [str(out)]


def test_console_entry(tmp_path):
    r = subprocess.run([sys.executable, "-m", "lpbaire.cli", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip() == "0.1.0"
