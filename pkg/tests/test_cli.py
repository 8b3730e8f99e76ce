import json
import subprocess
import sys

import jsonschema
import pytest

from nonlocal_ot.cli import build_world, load_schema, main
from nonlocal_ot.protocols import get_protocol


def call(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def call_json(capsys, *argv):
    code, out, _ = call(capsys, *argv)
    return code, json.loads(out)


def test_list(capsys):
    code, out, _ = call(capsys, "list")
    assert code == 0
    rows = out.strip().splitlines()[1:]
    assert len(rows) == 8
    assert any(r.startswith("ot-from-to: 1 bit ") for r in rows)
    assert any(r.startswith("ok-from-ko: 0 bits") for r in rows)
    assert any(r.startswith("ot-from-ok: 3 bits") for r in rows)


def test_run_ot_from_pr_trace(capsys):
    code, out, _ = call(capsys, "run", "ot-from-pr", "--inputs", "x0=1", "x1=0", "c=1", "a=0")
    assert code == 0
    assert "A→B: 1" in out
    assert "output B   0" in out


def test_run_ok_from_ko_prints_both_tuples(capsys):
    code, data = call_json(capsys, "run", "ok-from-ko", "--inputs", "X0=1", "X1=0", "C=1",
                           "--format", "json")
    assert code == 0
    assert data["outputs"] == {"A": [0, 1], "B": [1, 1]}
    assert data["transcript"] == []
    jsonschema.validate(data, load_schema("run"))


def test_same_seed_same_bytes(capsys):
    first = call(capsys, "run", "ot-from-ok", "--seed", "7")[1]
    second = call(capsys, "run", "ot-from-ok", "--seed", "7")[1]
    assert first == second


def test_fixing_one_bit_keeps_the_others():
    spec = get_protocol("ot-from-ok")
    free = build_world(spec, {}, seed=3)
    fixed = build_world(spec, {"c": 1 - free.input_b}, seed=3)
    assert fixed.input_a == free.input_a and fixed.resource_tape == free.resource_tape
    assert fixed.input_b != free.input_b


@pytest.mark.parametrize("argv", [
    ["run", "ot-from-nothing"],
    ["run", "ot-from-pr", "--inputs", "x0=2"],
    ["run", "ot-from-pr", "--inputs", "q=1"],
    ["run", "ot-from-pr", "--inputs", "x0"],
    ["verify"],
    ["search", "ot-from-ot", "--bits", "1"],
    ["chsh", "nonsense"],
    ["frobnicate"],
])
def test_usage_errors_exit_2(capsys, argv):
    assert call(capsys, *argv)[0] == 2


def test_verify_single(capsys, tmp_path):
    out = tmp_path / "r.json"
    code, data = call_json(capsys, "verify", "ot-from-ok", "--out", str(out))
    assert code == 0
    (report,) = data["reports"]
    assert report["comm_bits"] == 3 and report["pass"]
    assert json.loads(out.read_text(encoding="utf-8")) == data
    jsonschema.validate(data, load_schema("report"))


def test_verify_mutant_exits_1(capsys, tmp_path):
    spec = tmp_path / "m.json"
    spec.write_text(json.dumps({"protocol": "ot-from-pr", "mutation": "leaks-x1"}))
    code, data = call_json(capsys, "verify", "--spec-file", str(spec))
    assert code == 1
    (report,) = data["reports"]
    assert not report["privacy"]["B"]["pass"]
    assert report["privacy"]["B"]["counterexample"] is not None


def test_verify_all_is_independent_of_workers(capsys, monkeypatch):
    code, one = call(capsys, "verify", "--all")[:2]
    monkeypatch.setenv("NONLOCAL_OT_WORKERS", "3")
    code3, three = call(capsys, "verify", "--all")[:2]
    assert code == code3 == 0
    assert one == three
    data = json.loads(one)
    assert len(data["reports"]) == 8 and all(r["pass"] for r in data["reports"])


def test_bad_worker_env(capsys, monkeypatch):
    monkeypatch.setenv("NONLOCAL_OT_WORKERS", "many")
    assert call(capsys, "list")[0] == 2


def test_search_impossibility(capsys):
    code, data = call_json(capsys, "search", "ot-from-pr", "--bits", "0")
    assert code == 0
    assert data["mode"] == "impossibility" and data["correct_and_private"] == 0
    assert data["budgets"] == {"bits": 0, "one_way": False, "tape_budget": 1,
                               "enumeration_bound": 2**24}
    jsonschema.validate(data, load_schema("search"))


def test_search_witness(capsys):
    code, data = call_json(capsys, "search", "ot-from-pr", "--bits", "1")
    assert code == 0
    assert data["mode"] == "witness" and len(data["witnesses"]) >= 1
    assert data["located"]["correct_and_private"] >= 1
    jsonschema.validate(data, load_schema("search"))


def test_search_refusal_exit_2(capsys):
    code, _, err = call(capsys, "search", "ot-from-ok", "--bits", "2", "--bound", "1000")
    assert code == 2
    assert "outer assignments, bound is 1000" in err


def test_search_records_refused_templates(capsys):
    code, data = call_json(capsys, "search", "ot-from-ok", "--bits", "3")
    assert code == 0
    assert data["refused"][0]["template"] == ["AB", "BA", "AB"]
    assert "4294967296" in data["refused"][0]["reason"]


@pytest.mark.parametrize("behavior", ["singlet", "pr", "pr-variant", "local:1010"])
def test_chsh_schema(capsys, behavior):
    code, data = call_json(capsys, "chsh", behavior)
    assert code == 0
    jsonschema.validate(data, load_schema("chsh"))


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "nonlocal_ot.cli", "list"],
                          capture_output=True, text=True, encoding="utf-8")
    assert proc.returncode == 0
    assert "ot-from-pr: 1 bit" in proc.stdout
