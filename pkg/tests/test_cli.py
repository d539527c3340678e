import json

import numpy as np
import pytest

from quncert.cli import DEMOS, main, run_demo
from quncert.scenario import ScenarioError, load_scenario, parse_scenario

I2 = np.eye(2)
Z = np.diag([1.0, -1.0])


def _m(a):
    a = np.asarray(a, dtype=complex)
    return {"re": a.real.tolist(), "im": a.imag.tolist()}


def _scenario(effects=None, rep=(2.0, -2.0)):
    effects = effects or [(I2 + Z / 2) / 2, (I2 - Z / 2) / 2]
    return {
        "dim": 2,
        "states": {"mixed": _m(I2 / 2)},
        "observables": {"Z": _m(Z)},
        "measurements": {"M": {"outcomes": ["+", "-"], "effects": [_m(e) for e in effects]}},
        "functions": {"rep": list(rep)},
        "tasks": [{"kind": "error", "A": "Z", "M": "M", "state": "mixed"},
                  {"kind": "relation_representatives", "A": "Z", "B": "Z", "f": "rep", "g": "rep",
                   "M": "M", "state": "mixed"}],
    }


def _write(tmp_path, data, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


def test_verify_ok(tmp_path, capsys):
    assert main(["verify", _write(tmp_path, _scenario())]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["tasks"][0]["result"]["value"] == pytest.approx(np.sqrt(3) / 2)
    assert report["tasks"][1]["verdict"] == "holds"
    assert report["environment"]["tolerances"]["ineq_tol"] == 1e-9


def test_verify_violation_exits_one(tmp_path, capsys):
    assert main(["verify", _write(tmp_path, _scenario(rep=(1.0, -1.0)))]) == 1
    report = json.loads(capsys.readouterr().out)
    assert report["summary"]["violated"] == [1]


def test_verify_non_psd_effect_exits_two(tmp_path, capsys):
    bad = [np.diag([1.5, 0.5]), np.diag([-0.5, 0.5])]
    assert main(["verify", _write(tmp_path, _scenario(bad))]) == 2
    assert "measurements.M" in capsys.readouterr().err


def test_verify_input_errors(tmp_path, capsys):
    p = tmp_path / "broken.json"
    p.write_text('{"dim": 2,\n  "states": }')
    assert main(["verify", str(p)]) == 2
    assert "line 2" in capsys.readouterr().err
    assert main(["verify", str(tmp_path / "missing.json")]) == 2
    data = _scenario()
    data["tasks"][0]["A"] = "Q"
    assert main(["verify", _write(tmp_path, data)]) == 2
    assert "unresolved reference" in capsys.readouterr().err
    assert main(["frobnicate"]) == 2


def test_scenario_round_trip(tmp_path):
    s = parse_scenario(_scenario())
    assert parse_scenario(s.to_dict()) == s
    assert parse_scenario(json.loads(s.dumps())) == s
    assert load_scenario(_write(tmp_path, _scenario())) == s
    with pytest.raises(ScenarioError, match="dim"):
        parse_scenario({**_scenario(), "dim": 0})


def test_csv_output(tmp_path, capsys):
    out = tmp_path / "r.csv"
    assert main(["verify", _write(tmp_path, _scenario()), "--format", "csv", "--output", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "task,id,lhs,bound,slack,verdict"
    assert any("relation_representatives" in line and line.endswith("holds") for line in lines)


def test_tolerance_flags(tmp_path, capsys):
    assert main(["verify", _write(tmp_path, _scenario()), "--tol-ineq", "1e-6"]) == 0
    assert json.loads(capsys.readouterr().out)["environment"]["tolerances"]["ineq_tol"] == 1e-6
    assert main(["verify", _write(tmp_path, _scenario()), "--tol-eq", "-1"]) == 2


def test_sweep_zero_and_determinism(capsys):
    assert main(["sweep", "--count", "0"]) == 0
    capsys.readouterr()
    args = ["sweep", "--count", "6", "--seed", "4", "--dims", "2-3", "--outcomes", "3"]
    assert main(args) == 0
    first = capsys.readouterr().out
    assert main(args) == 0
    assert capsys.readouterr().out == first
    report = json.loads(first)
    assert report["passed"] and report["count"] == 6


def test_sweep_jobs_do_not_change_summary(capsys):
    base = ["sweep", "--count", "8", "--seed", "1", "--relations-only", "--format", "csv"]
    main(base)
    one = capsys.readouterr().out
    main(base + ["--jobs", "2"])
    assert capsys.readouterr().out == one


def test_sweep_bad_arguments():
    assert main(["sweep", "--dims", "1-3"]) == 2
    assert main(["sweep", "--count", "-1"]) == 2


@pytest.mark.parametrize("name", [d for d in DEMOS if d != "nogo-sweep"])
def test_demos_pass(name):
    report, code = run_demo(name, samples=10 ** 4)
    assert code == 0, report.get("checks")
    assert report["passed"]


def test_nogo_demo(capsys):
    assert main(["demo", "nogo-sweep", "--count", "50", "--format", "csv"]) == 0
    report, code = run_demo("nogo-sweep", count=50)
    assert report["result"]["min_max_error"] >= 1e-3


def test_unknown_demo():
    assert main(["demo", "nope"]) == 2
