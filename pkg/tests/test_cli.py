import json
import subprocess
import sys

import pytest

from uhfkit import cli, specdoc

EXPECTED_EXIT = {
    "finite-rokhlin": 0,
    "free-abelian": 0,
    "klein-bottle": 0,
    "prufer-negative": 2,
    "trivial-action": 2,
}

CUSTOM = {
    "schema_version": 1,
    "name": "custom",
    "group": {"kind": "abelian", "torsion": [4]},
    "pattern": {"kind": "custom_table", "moduli": [2, 2], "table": [[1], [1]]},
    "task": {"base_stage": 0},
}


def run_main(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_builtins_listed():
    assert specdoc.builtin_names() == sorted(EXPECTED_EXIT)


@pytest.mark.parametrize("name", sorted(EXPECTED_EXIT))
def test_builtin_exit_codes(name, capsys):
    code, out, _ = run_main(["report", "--spec", name], capsys)
    assert code == EXPECTED_EXIT[name]
    rep = json.loads(out)
    assert rep["exit_code"] == code
    assert rep["spec"]["name"] == name
    # the echoed spec is itself a valid spec
    specdoc.validate(rep["spec"])


def test_unknown_exit_code(tmp_path, capsys):
    p = tmp_path / "custom.json"
    p.write_text(json.dumps(CUSTOM))
    code, out, _ = run_main(["analyze", "--spec", str(p)], capsys)
    assert code == 3
    assert {v["status"] for v in json.loads(out)["verdicts"]} == {"unknown"}


def test_tower_missing_prime_power_is_unknown(tmp_path, capsys):
    p = tmp_path / "custom.json"
    p.write_text(json.dumps(CUSTOM))
    code, out, _ = run_main(["tower", "--spec", str(p)], capsys)
    rep = json.loads(out)
    assert code == 3
    assert rep["verdicts"][0]["missing"] == [4]


def test_schema_error_path(tmp_path, capsys):
    bad = dict(CUSTOM, group={"kind": "abelian", "torsion": [1]})
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(bad))
    code, out, err = run_main(["analyze", "--spec", str(p)], capsys)
    assert code == 64 and out == ""
    assert "/group/torsion/0" in err


def test_missing_group_and_bad_json(tmp_path, capsys):
    p = tmp_path / "nogroup.json"
    p.write_text(json.dumps({"schema_version": 1, "name": "x"}))
    assert run_main(["analyze", "--spec", str(p)], capsys)[0] == 64
    p.write_text("{not json")
    assert run_main(["analyze", "--spec", str(p)], capsys)[0] == 64


def test_usage_errors(capsys):
    assert run_main(["frobnicate", "--spec", "klein-bottle"], capsys)[0] == 64
    assert run_main(["report", "--spec", "no-such-spec"], capsys)[0] == 64
    assert run_main(["bratteli", "--spec", "klein-bottle"], capsys)[0] == 64


def test_deterministic_bytes(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    cli.main(["report", "--spec", "finite-rokhlin", "--out", str(a)])
    cli.main(["report", "--spec", "finite-rokhlin", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_timing_is_opt_in(capsys):
    _, out, _ = run_main(["kgroups", "--spec", "free-abelian"], capsys)
    assert "timing_seconds" not in json.loads(out)
    _, out, _ = run_main(["kgroups", "--spec", "free-abelian", "--timing"], capsys)
    assert "timing_seconds" in json.loads(out)


def test_overrides_reach_task(capsys):
    _, out, _ = run_main(["analyze", "--spec", "free-abelian", "--horizon", "12", "--epsilon", "1/7"], capsys)
    task = json.loads(out)["task"]
    assert task["horizon"] == 12 and task["epsilon"] == "1/7"


def test_kgroups_report(capsys):
    code, out, _ = run_main(["kgroups", "--spec", "free-abelian"], capsys)
    res = json.loads(out)["results"]
    assert code == 0
    assert res["invariants"]["K0_rank"] == 1 and res["invariants"]["K1_rank"] == 1
    assert res["uhf_k0"]["rank"] == 1 and 97 in res["uhf_k0"]["divisible_by"]


def test_text_format(capsys):
    code, out, _ = run_main(["induce", "--spec", "klein-bottle", "--format", "text"], capsys)
    assert code == 0
    assert "level 1: 18 points" in out
    assert "words with fixed points: aaa AAA" in out
    assert out.rstrip().endswith("exit 0")


def test_console_script_entry():
    r = subprocess.run([sys.executable, "-m", "uhfkit.cli", "kgroups", "--spec", "free-abelian"],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert json.loads(r.stdout)["command"] == "kgroups"
