import io
import json
from pathlib import Path

import pytest

from edgetree.cli import EXIT_INFEASIBLE, EXIT_OK, EXIT_PARSE, EXIT_RUNTIME, default_seed, main
from edgetree.dshell import DShell, ResourceViolation, ShellRepl, run_script, spawn_cost
from edgetree.runtime import LevelViolation, SameAppViolation
from edgetree.topology import load_topology, make_tree

from oracles import spawn_cold, spawn_shell_depth

ROOT = Path(__file__).parent.parent
CONFIGS = ROOT / "configs"
LISTINGS = Path(__file__).parent / "listings"


def run_cli(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


# parse

def test_parse_listing(capsys):
    code, out, _ = run_cli(["parse", LISTINGS / "filtering_vehicletemps.jd"], capsys)
    assert code == EXIT_OK
    assert "vehicleTempFinder" in out
    json.loads(out)


def test_parse_malformed(tmp_path, capsys):
    bad = tmp_path / "bad.jd"
    bad.write_text("jdata {\n  double x as logger(moon);\n}\n")
    code, _, err = run_cli(["parse", bad], capsys)
    assert code == EXIT_PARSE
    assert f"{bad}:2:" in err and "UnknownLevel" in err


def test_parse_missing_file(tmp_path, capsys):
    code, _, err = run_cli(["parse", tmp_path / "nope.jd"], capsys)
    assert code == EXIT_RUNTIME and err


# allocate

def test_allocate_sample(tmp_path, capsys):
    out = tmp_path / "sol.json"
    code, _, _ = run_cli(["allocate", CONFIGS / "sample_instance.json", "--out", out], capsys)
    assert code == EXIT_OK
    sol = json.loads(out.read_text())
    assert sol["z"] == 1784
    assert sol["active"] == ["F1", "F3", "F4"]
    assert {d for d, f in sol["assignment"].items() if f == "F3"} == {"D1", "D3", "D5"}
    assert sol["shadows"]["F1"] == ["F3", "F4"] and sol["shadows"]["F4"] == ["F1", "F2"]
    assert sol["stats"]["outer_nodes"] > 0


def test_allocate_csv_and_oracle(capsys):
    code, out, _ = run_cli(["allocate", CONFIGS / "sample_devfog.csv", CONFIGS / "sample_fogfog.csv",
                            "--csv", "--oracle"], capsys)
    assert code == EXIT_OK and json.loads(out)["z"] == 1784


def test_allocate_infeasible(tmp_path, capsys):
    doc = {"devices": ["a", "b"], "fogs": [{"id": "F", "fixed_cost": 1, "capacity": 1}],
           "c": [[1], [1]], "u": [[0]]}
    path = tmp_path / "inf.json"
    path.write_text(json.dumps(doc))
    code, _, err = run_cli(["allocate", path], capsys)
    assert code == EXIT_INFEASIBLE and "Infeasible" in err


def test_allocate_invalid(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"devices": []}))
    assert run_cli(["allocate", path], capsys)[0] == EXIT_PARSE
    assert run_cli(["allocate", tmp_path / "none.json"], capsys)[0] == EXIT_RUNTIME


# experiment

def test_experiment_writes_files(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"requests": 100, "scenarios": ["FogOnly"]}))
    code, out, _ = run_cli(["experiment", "turnaround", "--config", cfg, "--out", tmp_path / "r", "--seed", 3], capsys)
    assert code == EXIT_OK and "turnaround_FogOnly" in out
    assert (tmp_path / "r" / "turnaround_FogOnly_samples.csv").exists()


def test_experiment_bad_config(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("{not json")
    assert run_cli(["experiment", "push", "--config", cfg, "--out", tmp_path], capsys)[0] == EXIT_PARSE


def test_experiment_seed_env(tmp_path, capsys, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"requests": 50, "scenarios": ["CloudOnly"]}))
    monkeypatch.setenv("EDGETREE_SEED", "5")
    assert default_seed() == 5
    run_cli(["experiment", "turnaround", "--config", cfg, "--out", tmp_path / "a"], capsys)
    run_cli(["experiment", "turnaround", "--config", cfg, "--out", tmp_path / "b", "--seed", 5], capsys)
    name = "turnaround_CloudOnly_samples.csv"
    assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


# dshell

def shell(seed=0, reuse=20.0):
    return DShell(load_topology(CONFIGS / "tree_2x2.json"), seed, reuse)


def test_shell_faster_than_cold():
    topo = load_topology(CONFIGS / "tree_2x2.json")
    nodes = list(topo.nodes)
    assert spawn_cost(topo, nodes, "shell") < spawn_cost(topo, nodes, "cold")
    assert spawn_cost(topo, nodes, "cold") == spawn_cold([300.0] * 7)
    assert spawn_cost(topo, nodes, "shell") == spawn_shell_depth(3, 20.0)


def test_single_node_costs():
    topo = load_topology(CONFIGS / "tree_2x2.json")
    assert spawn_cost(topo, ["f1"], "cold") == 300.0
    assert spawn_cost(topo, ["f1"], "shell") == 20.0


def test_spawn_outside_resources():
    sh = shell()
    sh.resources.discard("d2.2")
    with pytest.raises(ResourceViolation):
        sh.spawn("jdata { int x as logger; }", ["f2", "d2.2"])


def test_run_jobs_kill():
    sh = shell()
    job = sh.spawn((CONFIGS / "programs" / "sensing.jd").read_text())
    assert job.state == "Running"
    assert [line.split()[1] for line in sh.job_lines()] == ["Running"]
    sh.kill(job.job_id)
    assert [line.split()[1] for line in sh.job_lines()] == ["Stopped"]


def test_pipe_errors():
    sh = shell()
    a = sh.spawn("jdata { int x as logger; }", ["f1", "d1.1"])
    b = sh.spawn("jdata { int y as logger; }", ["f2", "d2.1"])
    c = sh.spawn("jdata { int z as logger; }", ["cloud", "f1"])
    with pytest.raises(SameAppViolation):
        sh.pipe(a.job_id, a.job_id, "fog")
    with pytest.raises(LevelViolation):
        sh.pipe(a.job_id, b.job_id, "fog")
    flow = sh.pipe(a.job_id, c.job_id, "fog")
    sh.runtime.flow_write(flow, "m")
    sh.runtime.run()
    assert sh.runtime.flow_read(flow) == "m"


def test_namespaces_isolated():
    sh = shell()
    a = sh.spawn("jdata { int v as logger; }", ["f1", "d1.1"])
    b = sh.spawn("jdata { int v as logger; }", ["f1", "d1.1"])
    a.app.logger_write("d1.1", "v", 1)
    sh.runtime.run()
    assert a.app.logger_records("f1", "v") and not b.app.logger_records("f1", "v")


def test_unknown_command_keeps_session():
    out = io.StringIO()
    run_script(shell(), ["bogus", "jobs", "quit"], out)
    text = out.getvalue()
    assert "unknown command: bogus" in text and text.endswith("dsh> quit\n")


def test_repl_error_line():
    out = io.StringIO()
    repl = ShellRepl(shell(), stdout=out)
    repl.onecmd("kill 42")
    assert out.getvalue() == "error: ShellError: no such job: 42\n"


def test_script_transcript_deterministic(capsys):
    argv = ["dshell", "--topology", CONFIGS / "tree_2x2.json", "--script", CONFIGS / "session.dsh", "--seed", 7]
    first = run_cli(argv, capsys)
    second = run_cli(argv, capsys)
    assert first == second and first[0] == EXIT_OK
    assert "flow1 sensing-1 -> allocating-2 at fog on f1" in first[1]


def test_dshell_missing_files(tmp_path, capsys):
    assert run_cli(["dshell", "--topology", tmp_path / "t.json"], capsys)[0] == EXIT_RUNTIME
    argv = ["dshell", "--topology", CONFIGS / "tree_2x2.json", "--script", tmp_path / "s.dsh"]
    assert run_cli(argv, capsys)[0] == EXIT_RUNTIME


def test_module_entry_point():
    import subprocess
    import sys
    proc = subprocess.run([sys.executable, "-m", "edgetree", "parse", str(LISTINGS / "logger_decl.jd")],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)
