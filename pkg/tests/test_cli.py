import json

import pytest

from halving_lab import __version__
from halving_lab.cli import main
from halving_lab.rationals import format_rational, parse_rational


def run(tmp_path, *argv, name="out"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    return code, (out.read_text() if out.exists() else None)


def test_relate_row(tmp_path):
    code, text = run(tmp_path, "relate", "-p", "relation=bisects_in_limit", "-p", "S=periodic(;1,0)",
                     "-p", "X=periodic(;1)", "--tol", "1/10")
    assert code == 0
    lines = text.splitlines()
    assert lines[0] == "relation,subject,verdict,witness,notes"
    assert lines[1].startswith("bisects_in_limit,") and "HoldsAtHorizon" in lines[1]


def test_relate_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "horizon": 1000,
        "checks": [
            {"relation": "bisects_in_limit", "S": "periodic(;1)", "X": "periodic(;1)", "n0": 10},
            {"relation": "rho_independent", "family": ["periodic(;1,0)", "periodic(;1,1,0,0)"], "rho": "1/2", "cap": 2},
        ],
    }))
    code, text = run(tmp_path, "relate", "--config", str(cfg), "--format", "json")
    assert code == 0
    rows = json.loads(text)["rows"]
    assert rows[0]["verdict"] == "FailsAtHorizon" and rows[0]["witness"] == 10
    assert [r["subject"] for r in rows[1:]] == ["0", "0 1", "1"]


def test_manifest(tmp_path):
    code, _ = run(tmp_path, "mc", "-p", "experiment=recurrence", "-p", "steps=100", "-p", "trials=50", "--seed", "17")
    assert code == 0
    meta = json.loads((tmp_path / "out.manifest.json").read_text())
    assert meta["version"] == __version__ and meta["seeds"] == [17]
    assert len(meta["config_sha256"]) == 64 and "timestamp" in meta


def test_forge_replay_and_determinism(tmp_path):
    argv = ["forge", "-p", "index_count=3", "-p", "rounds=5", "-p", "min_horizon=4096", "--seed", "3"]
    code, a = run(tmp_path, *argv, name="a")
    _, b = run(tmp_path, *argv, name="b")
    assert code == 0 and a == b
    body = json.loads(a)
    assert len(body["rounds"]) == 5 and body["all_errors_ok"]
    for e in body["errors"]:
        assert format_rational(parse_rational(e["error"])) == e["error"]


def test_forge_schedule_file(tmp_path):
    sched = tmp_path / "steps.json"
    sched.write_text(json.dumps([{"op": "add", "index": 4}, {"op": "push", "m": 256, "eps": "1/2"}]))
    code, text = run(tmp_path, "forge", "-p", f"schedule={sched}", "--format", "csv")
    assert code == 0
    assert text.splitlines()[1].startswith("0,add 4,4,")


def test_construct_dominator(tmp_path):
    code, text = run(tmp_path, "construct", "-p", "witness=dominator", "-p", 'g={"start": 1, "stop": 1000}', "--horizon", "8")
    body = json.loads(text)
    assert code == 0 and body["Gamma"] == [0, 1, 2, 4, 8] and body["hits"][:2] == [2, 6]


def test_density_report(tmp_path):
    code, text = run(tmp_path, "density", "--set", "periodic(;1,0)", "--horizon", "100", "-p", "points=[10,99]")
    assert code == 0
    assert text.splitlines()[1:] == ['"periodic(;1,0)",10,5,1/2', '"periodic(;1,0)",99,50,50/99']


@pytest.mark.parametrize("argv,code", [
    (["relate", "-p", "relation=bisects_in_limit", "-p", "S=periodic(;1)", "-p", "X=periodic(;1)", "--tol", "1/0"], 2),
    (["density", "--set", "periodic(;1"], 2),
    (["mc", "-p", "experiment=nope"], 2),
    (["nope"], 2),
    (["construct", "-p", "witness=nonM", "--format", "csv"], 2),
    (["mc", "-p", "experiment=recurrence", "-p", "trials=0"], 3),
    (["construct", "-p", "witness=factorial", "--horizon", "1"], 3),
    (["forge", "-p", "index_count=3", "-p", "rounds=2"], 3),
])
def test_exit_codes(tmp_path, argv, code):
    assert run(tmp_path, *argv)[0] == code


def test_invariant_breach_exit_code(tmp_path, monkeypatch):
    from halving_lab import forcing

    def broken(*args, **kwargs):
        raise forcing.InvariantBreach("forced")

    monkeypatch.setattr(forcing, "replay", broken)
    assert run(tmp_path, "forge")[0] == 4


def test_stdout_mode(capsys):
    assert main(["mc", "-p", "experiment=single_fail", "-p", "k=6", "-p", "trials=100"]) == 0
    captured = capsys.readouterr()
    assert json.loads(captured.out)["experiment"] == "single_fail"
    assert json.loads(captured.err)["command"] == "mc"
