import json

import pytest

from moatlab import catalog
from moatlab.cli import main
from moatlab.instance import load, save
from moatlab.mergeplan import MergePlan, plan_to_json


@pytest.fixture
def four(tmp_path):
    path = tmp_path / "four.json"
    save(catalog.four_terminal_instance(), str(path))
    return str(path)


def test_missing_file_exits_2(capsys, tmp_path):
    assert main(["oracle", "bcr", "-i", str(tmp_path / "nope.json")]) == 2
    assert "no such file" in capsys.readouterr().err


def test_malformed_file_exits_2(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["grow", "-i", str(bad)]) == 2


@pytest.mark.parametrize("kind,want", [("bcr", "21"), ("hyp", "21"), ("opt", "21"), ("tmst", "25")])
def test_oracle(four, capsys, kind, want):
    assert main(["oracle", kind, "-i", four]) == 0
    assert capsys.readouterr().out.startswith(f"{kind} = {want} (")


def test_oracle_bad_root(four, capsys):
    assert main(["oracle", "bcr", "-i", four, "--root", "zz"]) == 1
    assert "not a terminal" in capsys.readouterr().err


def test_grow_zigzag(tmp_path, capsys):
    path = tmp_path / "z.json"
    save(catalog.zigzag_instance(), str(path))
    out = tmp_path / "run"
    code = main(["grow", "-i", str(path), "--scale", "7/6", "--epsilon", "1/100", "--subdivide",
                 "--out", str(out), "--frames", "0,5"])
    assert code == 0
    text = capsys.readouterr().out
    assert "well-subdivided: 6 vertices inserted" in text
    assert "feasible, dual = 2079/100" in text
    assert "dual/TMST = 231/400" in text
    trace = json.loads((out / "trace.json").read_text())
    assert "events" in trace
    assert len(list((out / "frames").iterdir())) == 2


def test_grow_plan_file(four, tmp_path, capsys):
    inst = load(four)
    plan = MergePlan(inst.terminals, lambda a, b: 0, check=False)
    pf = tmp_path / "plan.json"
    pf.write_text(plan_to_json(plan))
    assert main(["grow", "-i", four, "--plan", "file", "--plan-file", str(pf)]) == 0
    assert "feasible, dual = 0 " in capsys.readouterr().out
    assert main(["grow", "-i", four, "--plan", "file"]) == 2


def test_grow_gamma_plan(four, capsys):
    assert main(["grow", "-i", four, "--gamma", "1/10", "--epsilon", "1/100", "--subdivide"]) == 0
    assert capsys.readouterr().out.count("infeasible") == 0


def test_gap_integral(capsys):
    assert main(["gap"]) == 0
    out = capsys.readouterr().out
    assert "integral in [~0.0514" in out
    assert "gap bound <= ~1.897" in out


def test_gap_instance(four, capsys):
    assert main(["gap", "-i", four]) == 0
    out = capsys.readouterr().out
    assert "rho breakpoints: 4/25" in out
    assert "BCR/TMST = 21/25" in out


def test_gadget(tmp_path, capsys):
    out = tmp_path / "g.json"
    assert main(["gadget", "3x", "--k", "1", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "3x: |V| = 7, |E| = 6, |R| = 2" in text
    assert "FAIL" not in text
    assert load(str(out)).n == 7


def test_experiment_gap(tmp_path, capsys):
    out = tmp_path / "rep.json"
    assert main(["experiment", "gap-1898", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["pass"] is True
    assert "gap-1898: PASS" in capsys.readouterr().err


def test_unknown_experiment(capsys):
    assert main(["experiment", "nope"]) == 2
    assert "unknown experiment" in capsys.readouterr().err
