import json
import subprocess
import sys

import pytest

from noncobf import cli
from noncobf.report import read_csv

SMALL = ["--set", "array.n_horizontal=4", "--set", "array.n_vertical=2",
         "--set", "paths_per_user=6"]

ZF_CONFIG = {
    "num_users": 3,
    "array": {"n_horizontal": 4, "n_vertical": 2},
    "users": [
        {"paths": [{"gain_magnitude": 1.0, "azimuth": -0.8}]},
        {"paths": [{"gain_magnitude": 0.8, "delay": 1e-7, "azimuth": 0.3, "elevation": 0.1},
                   {"gain_magnitude": 0.6, "delay": 3e-7, "azimuth": 1.0, "elevation": -0.2}]},
        # same direction as user 2's second path: inside user 2's span
        {"paths": [{"gain_magnitude": 1.0, "delay": 2e-7, "azimuth": 1.0, "elevation": -0.2}]},
    ],
}


def run(tmp_path, name, *args):
    out = tmp_path / name
    code = cli.main([*args, "--out", str(out)])
    return code, out


def test_cdf_study_row_count(tmp_path):
    code, out = run(tmp_path, "cdf", "cdf-study", *SMALL, "--set", "num_users=1",
                    "--set", "num_locations=100", "--freq-points", "3")
    assert code == 0
    rows = read_csv(out / "cdf.csv")
    designs = ("coherent", "uniform", "stationary", "worstcase")
    for d in designs:
        assert sum(r["design"] == d for r in rows) == 100 * 3
    meta = json.loads((out / "cdf_meta.json").read_text())
    assert meta["rows_per_design"] == {d: 300 for d in designs}
    assert meta["config"]["num_locations"] == 100 and meta["seed"] == 0


@pytest.mark.parametrize("cmd,extra,files", [
    ("design-su", ["--set", "num_users=2", "--draws", "200"], ["design_su.json"]),
    ("design-mu", ["--set", "num_users=3", "--set", "paths_per_user=2", "--draws", "200"], ["design_mu.json"]),
    ("sweep", ["--freq-points", "5"], ["sweep.csv", "sweep_meta.json"]),
    ("cdf-study", ["--set", "num_users=2", "--set", "num_locations=8",
                   "--set", "num_selections=3", "--freq-points", "2"],
     ["cdf.csv", "cdf_meta.json"]),
])
def test_deterministic(tmp_path, cmd, extra, files):
    args = [cmd, *SMALL, *extra, "--seed", "7"]
    c1, o1 = run(tmp_path, "a", *args)
    c2, o2 = run(tmp_path, "b", *args)
    assert c1 == c2 == 0
    for f in files:
        assert (o1 / f).read_bytes() == (o2 / f).read_bytes()


def test_thread_cap_does_not_change_output(tmp_path, monkeypatch):
    args = ["cdf-study", *SMALL, "--set", "num_users=1", "--set", "num_locations=6",
            "--freq-points", "2"]
    monkeypatch.setenv("NONCOBF_THREADS", "1")
    _, o1 = run(tmp_path, "a", *args)
    monkeypatch.setenv("NONCOBF_THREADS", "4")
    _, o2 = run(tmp_path, "b", *args)
    assert (o1 / "cdf.csv").read_bytes() == (o2 / "cdf.csv").read_bytes()


def test_zf_infeasible_names_user_3(tmp_path, capsys):
    cfg = tmp_path / "zf.json"
    cfg.write_text(json.dumps(ZF_CONFIG))
    code, out = run(tmp_path, "zf", "design-mu", "--config", str(cfg))
    assert code == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "zf-infeasible"
    assert err["blocked_users"] == [3]
    assert "3" in err["message"]
    assert json.loads((out / "error.json").read_text()) == err
    report = json.loads((out / "design_mu.json").read_text())
    assert [r["feasible"] for r in report["feasibility"]] == [True, True, False]


def test_design_mu_without_zf_runs_on_infeasible_set(tmp_path):
    cfg = tmp_path / "zf.json"
    cfg.write_text(json.dumps(ZF_CONFIG))
    code, out = run(tmp_path, "ok", "design-mu", "--config", str(cfg),
                    "--designs", "coherent,rzf", "--draws", "100")
    assert code == 0
    report = json.loads((out / "design_mu.json").read_text())
    assert [u["user"] for u in report["designs"]["rzf"]] == [1, 2, 3]


@pytest.mark.parametrize("args", [
    ["sweep", "--set", "bogus=1"],
    ["sweep", "--set", "novalue"],
    ["sweep", "--config", "/nonexistent/config.json"],
    ["design-su", "--designs", "zf-stationary"],
    ["sweep", "--set", "bandwidth=-1"],
    ["design-su", "--draws", "-1"],
    ["sweep", "--freq-points", "1"],
])
def test_config_errors(tmp_path, capsys, args):
    code, out = run(tmp_path, "err", *args)
    assert code == 1
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] in ("config", "invalid-argument")
    assert (out / "error.json").exists()


def test_unexpected_error_exit_3(tmp_path, monkeypatch):
    def boom(*a):
        raise RuntimeError("boom")

    monkeypatch.setitem(cli.RUNNERS, "sweep", boom)
    code, out = run(tmp_path, "x", "sweep", *SMALL)
    assert code == 3
    assert json.loads((out / "error.json").read_text())["error"] == "internal"


def test_overrides_and_metadata(tmp_path):
    code, out = run(tmp_path, "sw", "sweep", *SMALL, "--set", "los_mode=los",
                    "--set", "snr_db=[5, 6, 7, 8, 9]", "--seed", "11", "--freq-points", "4")
    assert code == 0
    meta = json.loads((out / "sweep_meta.json").read_text())
    assert meta["config"]["los_mode"] == "los"
    assert meta["config"]["snr_db"] == [5, 6, 7, 8, 9]
    assert meta["seed"] == 11 and meta["config"]["num_subcarriers"] == 4
    rows = read_csv(out / "sweep.csv")
    assert list(rows[0]) == ["design", "frequency_hz", "gain_db"]
    assert len(rows) == 4 * 4


def test_design_su_report(tmp_path):
    code, out = run(tmp_path, "su", "design-su", *SMALL, "--set", "num_users=1",
                    "--draws", "500")
    assert code == 0
    rep = json.loads((out / "design_su.json").read_text())
    d = rep["users"][0]["designs"]
    assert set(d) == {"coherent", "uniform", "stationary", "worstcase"}
    assert d["stationary"]["stationary_gain_db"] >= d["uniform"]["stationary_gain_db"]
    assert d["worstcase"]["mc_min_gain_db"] >= d["worstcase"]["worst_case_gain_db"] - 1e-6
    assert len(d["stationary"]["weights"]) == 8


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "noncobf", "--help"], capture_output=True,
                         text=True)
    assert res.returncode == 0 and "cdf-study" in res.stdout
