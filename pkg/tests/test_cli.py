import io
import json
from pathlib import Path

import pytest

from mucows.cli import main

ROOT = Path(__file__).resolve().parents[1]
DATA = Path(__file__).resolve().parent / "data"
SCEN = ROOT / "scenarios"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_nil(tmp_path, capsys):
    f = tmp_path / "nil.cows"
    f.write_text("0")
    assert run(capsys, "parse", f) == (0, "0\n", "")


def test_parse_error_exit_2(tmp_path, capsys):
    f = tmp_path / "bad.cows"
    f.write_text("a ! b<\n")
    code, out, err = run(capsys, "parse", f)
    assert code == 2 and out == "" and "bad.cows:" in err and "1:" in err
    assert run(capsys, "parse", tmp_path / "missing.cows")[0] == 2


def test_usage_errors(capsys):
    assert run(capsys, "run", SCEN / "tablemanager.cows", "--max-steps", "-1")[0] == 2
    assert run(capsys, "run", SCEN / "tablemanager.cows", "--seed", str(2 ** 64))[0] == 2
    assert run(capsys, "scenario", "1", "a:g")[0] == 2
    assert run(capsys, "scenario", "2", "a:g,a:g")[0] == 2
    assert run(capsys, "frobnicate")[0] == 2


def test_fmt_roundtrip(tmp_path, capsys):
    out = tmp_path / "f.cows"
    assert run(capsys, "fmt", SCEN / "tablemanager.cows", "--out", out)[0] == 0
    a = run(capsys, "parse", SCEN / "tablemanager.cows")[1]
    b = run(capsys, "parse", out)[1]
    assert a == b


@pytest.mark.parametrize("name", ["tablemanager", "three_players"])
def test_check_bundled_scenarios_pass(capsys, name):
    code, out, _ = run(capsys, "check", SCEN / f"{name}.cows", SCEN / f"{name}.assert")
    assert code == 0
    assert out and all(line.startswith("PASS ") for line in out.splitlines())


def test_check_failure_and_json(tmp_path, capsys):
    a = tmp_path / "x.assert"
    a.write_text("all: never(partner=p_R, op=start)\nall: count(op=join, domain=2) == 3\n")
    code, out, _ = run(capsys, "check", SCEN / "tablemanager.cows", a)
    lines = out.splitlines()
    assert code == 1 and lines[0].startswith("PASS ") and lines[1].startswith("FAIL ")
    trace = [json.loads(l) for l in lines[2:]]
    assert trace and [s["step"] for s in trace] == list(range(len(trace)))
    assert sum(s["op"] == "join" and s["domain"] == 2 for s in trace) != 3
    code, out, _ = run(capsys, "check", SCEN / "tablemanager.cows", a, "--json")
    objs = [json.loads(l) for l in out.splitlines()]
    assert code == 1 and [o["passed"] for o in objs] == [True, False]
    assert objs[0]["trace"] == [] and objs[1]["trace"] == trace


def test_check_errors_exit_2(tmp_path, capsys):
    a = tmp_path / "x.assert"
    a.write_text("all: bogus(op=start)\n")
    assert run(capsys, "check", SCEN / "tablemanager.cows", a)[0] == 2
    a.write_text("all: never(op=start)\n")
    code, _, err = run(capsys, "check", SCEN / "tablemanager.cows", a, "--max-states", "3")
    assert code == 2 and "max_states" in err


def test_check_this_uses_seeded_run(tmp_path, capsys):
    a = tmp_path / "x.assert"
    a.write_text("this: count(op=start) == 4\nall: eventually(op=join)\n")
    code, out, _ = run(capsys, "check", SCEN / "tablemanager.cows", a, "--seed", "9")
    assert code == 0 and len(out.splitlines()) == 2


def test_run_deterministic(tmp_path, capsys):
    outs = []
    for i in range(2):
        f = tmp_path / f"t{i}.jsonl"
        code, _, err = run(capsys, "run", SCEN / "tablemanager.cows", "--seed", "5", "--out", f)
        assert code == 0 and "stuck" in err
        outs.append(f.read_bytes())
    assert outs[0] == outs[1]
    steps = [json.loads(l) for l in outs[0].decode().splitlines()]
    assert sum(s["op"] == "start" for s in steps) == 4
    code, out, _ = run(capsys, "run", SCEN / "tablemanager.cows", "--seed", "5", "--max-steps", "2")
    assert code == 0 and len(out.splitlines()) == 2


def test_explore_output(tmp_path, capsys):
    f = tmp_path / "lts.jsonl"
    code, out, _ = run(capsys, "explore", SCEN / "tablemanager.cows", "--out", f)
    summary = json.loads(out)
    assert code == 0 and not summary["truncated"]
    lines = f.read_text().splitlines()
    assert json.loads(lines[0]) == summary and len(lines) == 1 + summary["transitions"]


@pytest.mark.parametrize("name, size, players", [
    ("tablemanager", 4, "p_L:burraco,p_R:canasta,p_F:burraco,p_1:burraco,p_2:burraco"),
    ("three_players", 4, "p_L:burraco,p_R:canasta,p_F:burraco"),
    ("eight_burraco", 4, ",".join(f"p{i}:burraco" for i in range(8))),
])
def test_scenario_reproduces_bundled_files(tmp_path, capsys, name, size, players):
    prefix = tmp_path / "gen"
    assert run(capsys, "scenario", size, players, "--out", prefix)[0] == 0
    for ext in ("cows", "assert"):
        assert Path(f"{prefix}.{ext}").read_text() == (SCEN / f"{name}.{ext}").read_text()
    code, out, _ = run(capsys, "scenario", size, players)
    assert code == 0 and out == (SCEN / f"{name}.cows").read_text()


def test_step_golden_session(tmp_path, capsys, monkeypatch):
    f = tmp_path / "trace.jsonl"
    src = SCEN / "three_players.cows"
    before = src.read_bytes()
    monkeypatch.setattr("sys.stdin", io.StringIO((DATA / "session.in").read_text()))
    code, out, _ = run(capsys, "step", src, "--out", f)
    assert code == 0
    assert out == (DATA / "session.out").read_text()
    assert f.read_text() == (DATA / "session_trace.jsonl").read_text()
    assert src.read_bytes() == before
