import json
import subprocess
import sys

import pytest

from kindsim.cli import main
from kindsim.config import ConfigError, RunConfig, parse_graph_arg
from kindsim.graph import complete_graph, parse_edge_list

BASE = ["--mu-plus", "0.5", "--mu-minus", "0.2"]
FAST_CERT = {"trajectories": 5, "random_states": 200}


def write_config(tmp_path, **fields):
    cfg = {"mu_plus": 0.5, "mu_minus": 0.2, "certification": FAST_CERT}
    cfg.update(fields)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def read_csv(path):
    return path.read_text().splitlines()


def test_simulate_zero_budget(tmp_path):
    assert main(["simulate", *BASE, "--event-budget", "0", "--out", str(tmp_path)]) == 0
    lines = read_csv(tmp_path / "trajectory.csv")
    assert lines[0] == "event,t,X" and len(lines) == 2
    assert lines[1].startswith("0,0,")
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["events"] == 0 and summary["stop_reason"] == "max_events"


def test_simulate_from_all_kind(tmp_path):
    args = ["simulate", *BASE, "--graph", "complete:7", "--init", "1", "--event-budget", "50"]
    assert main(args + ["--out", str(tmp_path)]) == 0
    rows = [ln.split(",") for ln in read_csv(tmp_path / "trajectory.csv")[1:]]
    assert rows and all(r[2] == "7" for r in rows)
    assert json.loads((tmp_path / "summary.json").read_text())["absorption"] == "plus"


def test_simulate_typical_run(tmp_path):
    args = ["simulate", *BASE, "--graph", "complete:20", "--event-budget", "1000000",
            "--stride", "1000", "--seed", "3", "--out", str(tmp_path)]
    assert main(args) == 0
    s = json.loads((tmp_path / "summary.json").read_text())
    assert s["classification"] == "hit_plus" or s["absorption"] == "plus"


def test_sweep_single_row(tmp_path):
    cfg = write_config(tmp_path, Ns=[10], replicates=100, event_budget=10**6)
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == 0
    lines = read_csv(tmp_path / "sweep.csv")
    assert lines[0].startswith("N,eps,mu_plus") and len(lines) == 2
    assert lines[1].startswith("10,0.3,0.5,0.2,100,")
    report = json.loads((tmp_path / "sweep_report.json").read_text())
    assert report["bounds_ok"] is True


def test_missing_mu_is_config_error(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"mu_plus": 0.5}))
    assert main(["sweep", "--config", str(path), "--out", str(tmp_path)]) == 2
    assert "mu_minus" in capsys.readouterr().err


@pytest.mark.parametrize("args", [
    ["simulate", *BASE, "--epsilon", "0.7"],
    ["simulate", *BASE, "--graph", "hexagon:3"],
    ["simulate", "--mu-plus", "1.5", "--mu-minus", "0.2"],
    ["simulate", *BASE, "--seed", "-1"],
    ["simulate", *BASE, "--init", "kind"],
    ["bogus"],
])
def test_usage_errors_exit_2(args, tmp_path):
    assert main(args + ["--out", str(tmp_path)]) == 2


def test_certify_degenerate(tmp_path, capsys):
    assert main(["certify", "--mu-plus", "0.3", "--mu-minus", "0.3", "--out", str(tmp_path)]) == 1
    assert "degenerate drift" in capsys.readouterr().err


def test_certify_deterministic(tmp_path):
    cfg = write_config(tmp_path, graph={"kind": "cycle", "n": 8})
    outs = []
    for name in ("a", "b"):
        assert main(["certify", "--config", cfg, "--seed", "12", "--out", str(tmp_path / name)]) == 0
        outs.append((tmp_path / name / "certificate.json").read_bytes())
    assert outs[0] == outs[1]
    cert = json.loads(outs[0])
    assert cert["c"] > 1 and cert["method"]["ensemble"]


def test_verify_default_and_fault(capsys):
    assert main(["verify", *BASE]) == 0
    assert "FAIL" not in capsys.readouterr().out
    assert main(["verify", *BASE, "--inject-fault", "rho-sign"]) == 1
    out = capsys.readouterr().out
    assert any(ln.startswith("FAIL") and "pair-drift" in ln for ln in out.splitlines())


def test_verify_wide_epsilon(capsys):
    assert main(["verify", *BASE, "--epsilon", "0.45"]) == 0


def test_graph_gen_complete(tmp_path):
    assert main(["graph-gen", *BASE, "--graph", "complete:4", "--out", str(tmp_path)]) == 0
    text = (tmp_path / "graph.edges").read_text()
    assert len(text.splitlines()) == 6
    assert parse_edge_list(text) == complete_graph(4)


def test_graph_gen_file_round_trip(tmp_path):
    assert main(["graph-gen", *BASE, "--graph", "grid:3x2", "--out", str(tmp_path / "a")]) == 0
    src = tmp_path / "a" / "graph.edges"
    assert main(["graph-gen", *BASE, "--graph", f"file:{src}", "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "b" / "graph.edges").read_bytes() == src.read_bytes()


def test_graph_gen_erdos_renyi_deterministic(tmp_path):
    files = []
    for name in ("a", "b"):
        assert main(["graph-gen", *BASE, "--graph", "er:20:0.2", "--seed", "5",
                     "--out", str(tmp_path / name)]) == 0
        files.append((tmp_path / name / "graph.edges").read_bytes())
    assert files[0] == files[1]


def test_fixation_command(tmp_path):
    args = ["fixation", "--mu-plus", "1", "--mu-minus", "1", "--graph", "complete:5",
            "--init", "1", "--replicates", "5", "--delta", "0", "--out", str(tmp_path)]
    assert main(args) == 0
    lines = read_csv(tmp_path / "fixation.csv")
    assert lines[0] == "replicate,outcome,events,final_X"
    assert all(ln.split(",")[1:] == ["plus", "0", "5"] for ln in lines[1:])


def test_config_round_trip():
    cfg = RunConfig.from_dict({"mu_plus": 0.5, "mu_minus": 0.2, "graph": {"kind": "grid", "width": 3, "height": 2},
                               "Ns": [4, 8], "init": 0.25, "certification": FAST_CERT})
    assert RunConfig.from_json(cfg.to_json()) == cfg
    assert RunConfig.from_json(cfg.to_json()).to_json() == cfg.to_json()


def test_config_errors():
    with pytest.raises(ConfigError, match="mu_plus"):
        RunConfig.from_dict({"mu_minus": 0.2})
    with pytest.raises(ConfigError, match="unknown"):
        RunConfig.from_dict({"mu_plus": 0.5, "mu_minus": 0.2, "colour": 1})
    with pytest.raises(ConfigError):
        RunConfig.from_json("[1, 2]")
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"mu_plus": 0.5, "mu_minus": 0.2, "Ns": [20, 10]})


def test_parse_graph_arg():
    assert parse_graph_arg("complete:10") == {"kind": "complete", "n": 10}
    assert parse_graph_arg("grid:4x3") == {"kind": "grid", "width": 4, "height": 3}
    assert parse_graph_arg("er:20:0.2") == {"kind": "erdos_renyi", "n": 20, "p": 0.2}
    with pytest.raises(ConfigError):
        parse_graph_arg("grid:4")


def test_threads_env_does_not_change_output(tmp_path, monkeypatch):
    cfg = write_config(tmp_path, graph={"kind": "cycle", "n": 6}, replicates=50, event_budget=10**6)
    outs = []
    for k in ("1", "3"):
        monkeypatch.setenv("KINDSIM_THREADS", k)
        assert main(["fixation", "--config", cfg, "--out", str(tmp_path / k)]) == 0
        outs.append((tmp_path / k / "fixation.csv").read_bytes())
    assert outs[0] == outs[1]


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "kindsim", "graph-gen", *BASE, "--graph", "cycle:5",
                          "--out", str(tmp_path)], capture_output=True, text=True)
    assert res.returncode == 0
    assert len((tmp_path / "graph.edges").read_text().splitlines()) == 5
