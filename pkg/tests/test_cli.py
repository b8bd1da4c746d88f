import json
import subprocess
import sys

import pytest

from nesydfa.cli import main


def test_compile_writes_artifacts(tmp_path, capsys):
    assert main(["compile", "F a & F b", "--props", "a,b", "--out", str(tmp_path)]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats == {"n_states": 4, "n_symbols": 2, "n_outputs": 2}
    assert {p.name for p in tmp_path.iterdir()} == {"dfa.json", "graph.dot", "stats.json"}


def test_compile_true_has_one_state(tmp_path, capsys):
    assert main(["compile", "true", "--props", "a", "--out", str(tmp_path)]) == 0
    assert json.loads(capsys.readouterr().out)["n_states"] == 1


def test_compile_with_rewards(tmp_path):
    assert main(["compile", "F a", "--props", "a,b", "--rewards", "sparse", "--out", str(tmp_path)]) == 0
    machine = json.loads((tmp_path / "machine.json").read_text())
    assert machine["outputs"] == ["win", "fail", "neutral"]


def test_catalog_name_and_file(tmp_path):
    assert main(["compile", "response", "--out", str(tmp_path / "a")]) == 0
    (tmp_path / "f.ltl").write_text("G (a -> F b)\n")
    assert main(["compile", "--file", str(tmp_path / "f.ltl"), "--props", "a,b", "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "dfa.json").read_text() == (tmp_path / "b" / "dfa.json").read_text()


@pytest.mark.parametrize("argv", [
    ["compile", "a U"],
    ["compile", "F c", "--props", "a,b"],
    ["nosuch"],
    ["rl", "--agents", "dqn"],
    ["rl", "--tasks", "nowhere"],
    ["sssg", "--formulas", "nope"],
])
def test_usage_errors_exit_2(argv, tmp_path, capsys):
    assert main(argv + ["--out", str(tmp_path)] if argv[0] != "nosuch" else argv) == 2


def test_dqn_message_mentions_on_policy(tmp_path, capsys):
    main(["rl", "--agents", "dqn", "--out", str(tmp_path)])
    assert "on-policy" in capsys.readouterr().err


def test_bad_config_file(tmp_path):
    (tmp_path / "c.json").write_text("{not json")
    assert main(["rl", "--config", str(tmp_path / "c.json"), "--out", str(tmp_path)]) == 2


def test_runtime_failure_exits_1(tmp_path):
    assert main(["compile", "F a & F b & F c", "--props", "a,b,c", "--max-states", "2", "--out", str(tmp_path)]) == 1
    assert main(["gradcheck", "--configs", "1", "--tol", "0"]) == 1


def test_eval_runs_machine(tmp_path, capsys):
    main(["compile", "F a", "--props", "a,b", "--rewards", "dense", "--out", str(tmp_path)])
    capsys.readouterr()
    assert main(["eval", str(tmp_path / "machine.json"), "--trace", "b,a"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["states"] == [0, 0, 1] and rec["outputs"] == ["phi=0", "phi=100"]
    assert main(["eval", str(tmp_path / "dfa.json"), "--trace", "b,x"]) == 2


def test_flags_override_config(tmp_path):
    cfg = {"tasks": ["visit_pg"], "agents": ["rnn"], "episodes": 3, "seeds": [4]}
    (tmp_path / "c.json").write_text(json.dumps(cfg))
    out = tmp_path / "o"
    assert main(["rl", "--config", str(tmp_path / "c.json"), "--agents", "rm", "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["agents"] == ["rm"] and manifest["seeds"] == [4]
    assert (out / "runs" / "rm_visit_pg_dense_s4.csv").exists()


def test_rl_rerun_is_byte_identical(tmp_path):
    args = ["rl", "--agents", "rm,nrm,rnn", "--tasks", "visit_pg", "--episodes", "15", "--runs", "2"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b"), "--threads", "4"]) == 0
    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*.csv"))
    assert len(files) == 10
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_sssg_and_eval_round_trip(tmp_path, capsys):
    out = tmp_path / "s"
    args = ["sssg", "--formulas", "existence,choice", "--runs", "2", "--keep", "1", "--epochs", "10"]
    assert main(args + ["--out", str(out)]) == 0
    summary = (out / "summary.csv").read_text()
    assert "degenerate" in summary and "existence,test15,ok,1" in summary
    assert json.loads((out / "manifest.json").read_text())["seeds"] == [0, 1]
    metrics = (out / "metrics.csv").read_bytes()
    assert main(args + ["--out", str(out), "--threads", "2"]) == 0
    assert (out / "metrics.csv").read_bytes() == metrics

    assert main(["dataset", "existence", "--out", str(tmp_path / "d"), "--test-per-class", "10"]) == 0
    capsys.readouterr()
    assert main(["eval", "--dataset", str(tmp_path / "d" / "existence.glyd"),
                 "--checkpoint", str(out / "checkpoints" / "existence_s0.twck")]) == 0
    lines = [json.loads(x) for x in capsys.readouterr().out.splitlines()]
    assert [r["split"] for r in lines] == ["train", "test10", "test15"]


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "nesydfa.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and "nesydfa" in out.stdout
