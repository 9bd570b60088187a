import json
import subprocess
import sys

import pytest

from specshare import cli

SMALL = {
    "geo-leo-reuse": {"altitudes_km": [600, 1200], "inclinations_deg": [53, 90], "sample_count": 500},
    "ntn-sinr": {"step_s": 60},
    "rem": {"n_blocks": 20, "noise_std_db": 2.0},
    "coalition": {"bandwidths": [10, 5, 3]},
    "market-sim": {"epochs": 5},
}
OUTPUTS = {
    "geo-leo-reuse": ["geo-leo-reuse.csv"],
    "ntn-sinr": ["ntn-sinr.csv"],
    "rem": ["rem.csv", "rem_metrics.csv"],
    "coalition": ["coalition.csv", "coalition_shapley.csv"],
    "market-sim": ["market-sim.csv", "market-sim_summary.csv"],
}


def _scenario(tmp_path, kind, **extra):
    path = tmp_path / f"{kind}.json"
    path.write_text(json.dumps({"experiment": kind, "seed": 3, **SMALL[kind], **extra}))
    return path


def test_coalition_contract(tmp_path):
    out = tmp_path / "out"
    assert cli.run(["coalition", "--scenario", str(_scenario(tmp_path, "coalition")), "--out", str(out)]) == 0
    lines = (out / "coalition.csv").read_bytes().split(b"\n")
    assert lines[0] == b"beta,coalition_bitmask,value" and lines[-1] == b""
    assert b"\r" not in (out / "coalition.csv").read_bytes()
    report = json.loads((out / "run.json").read_text())
    assert report["seed"] == 3 and report["generator"]["name"] == "philox4x64"
    assert set(report["files"]) == {"coalition.csv", "coalition_shapley.csv"}
    assert len(report["scenario_digest"]) == 64 and report["wall_time_s"] >= 0


@pytest.mark.parametrize("kind", sorted(SMALL))
def test_rerun_byte_identical(tmp_path, kind):
    scen = _scenario(tmp_path, kind)
    outs = []
    for k, threads in enumerate(("1", "1", "4")):
        out = tmp_path / f"o{k}"
        assert cli.run([kind, "--scenario", str(scen), "--out", str(out), "--threads", threads]) == 0
        outs.append({name: (out / name).read_bytes() for name in OUTPUTS[kind]})
    assert outs[0] == outs[1] == outs[2]
    assert all(outs[0].values())


def test_seed_flag_overrides(tmp_path):
    scen = _scenario(tmp_path, "market-sim")
    runs = []
    for k, seed in enumerate(("3", "4")):
        out = tmp_path / f"s{k}"
        assert cli.run(["market-sim", "--scenario", str(scen), "--out", str(out), "--seed", seed]) == 0
        runs.append((out / "market-sim.csv").read_bytes())
        assert json.loads((out / "run.json").read_text())["seed"] == int(seed)
    assert runs[0] != runs[1]


def test_out_dir_precedence(tmp_path, monkeypatch):
    scen = _scenario(tmp_path, "coalition", output_dir=str(tmp_path / "from-scenario"))
    assert cli.run(["coalition", "--scenario", str(scen)]) == 0
    assert (tmp_path / "from-scenario" / "coalition.csv").exists()
    monkeypatch.setenv("SIM_OUT_DIR", str(tmp_path / "from-env"))
    assert cli.run(["coalition", "--scenario", str(scen)]) == 0
    assert (tmp_path / "from-env" / "coalition.csv").exists()
    assert cli.run(["coalition", "--scenario", str(scen), "--out", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "flag" / "coalition.csv").exists()


@pytest.mark.parametrize("argv", [
    ["bogus", "--scenario", "x.json"],
    ["coalition"],
    ["coalition", "--scenario", "x.json", "--seed", "-4"],
    ["coalition", "--scenario", "x.json", "--threads", "0"],
    [],
])
def test_usage_errors(argv, capsys):
    assert cli.run(argv) == 2
    assert "usage" in capsys.readouterr().err


def test_scenario_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"experiment": "coalition", "seed": 1, "betta": 2}')
    assert cli.run(["coalition", "--scenario", str(bad), "--out", str(tmp_path)]) == 3
    assert "$.betta" in capsys.readouterr().err
    assert cli.run(["coalition", "--scenario", str(tmp_path / "missing.json")]) == 3
    other = _scenario(tmp_path, "rem")
    assert cli.run(["coalition", "--scenario", str(other), "--out", str(tmp_path)]) == 3


def test_runtime_error(tmp_path, capsys):
    scen = _scenario(tmp_path, "ntn-sinr", duration_s=60.0)
    out = tmp_path / "o"
    assert cli.run(["ntn-sinr", "--scenario", str(scen), "--out", str(out)]) == 4
    assert "orbital period" in capsys.readouterr().err
    assert not (out / "ntn-sinr.csv").exists()


def test_format_value():
    assert cli.format_value(1 / 3) == "0.333333333"
    assert cli.format_value(12) == "12"
    assert cli.format_value(True) == "true"
    assert cli.format_value(1e-12) == "1e-12"


def test_console_entry_point(tmp_path):
    scen = _scenario(tmp_path, "coalition")
    proc = subprocess.run([sys.executable, "-m", "specshare.cli", "coalition", "--scenario", str(scen),
                           "--out", str(tmp_path / "o")], capture_output=True)
    assert proc.returncode == 0, proc.stderr
    bad = subprocess.run([sys.executable, "-m", "specshare.cli", "nope"], capture_output=True)
    assert bad.returncode == 2 and b"usage" in bad.stderr
