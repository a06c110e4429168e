import csv
import io
import json

import pytest
from click.testing import CliRunner

from w_expander.cli import cli


@pytest.fixture
def runner():
    return CliRunner()


def _build(runner, tmp_path, *args):
    out = tmp_path / "c.json"
    res = runner.invoke(cli, ["build", *args, "-o", str(out)])
    assert res.exit_code == 0, res.output
    return out


def test_build_optimal_n2_to_stdout(runner):
    res = runner.invoke(cli, ["build", "--kind", "optimal", "-n", "2"])
    assert res.exit_code == 0
    data = json.loads(res.stdout)
    kinds = [e["kind"] for e in data["elements"]]
    assert kinds.count("pdbs") == 1 and kinds.count("bs") == 1
    assert [e for e in data["elements"] if e["kind"] == "bs"][0]["params"]["T"] == pytest.approx(0.5)
    assert "pdbs" in res.stderr


def test_build_lossy_n1(runner):
    data = json.loads(runner.invoke(cli, ["build", "--kind", "lossy", "-n", "1"]).stdout)
    assert data["elements"][0]["params"]["T_H"] == pytest.approx(0.25)
    assert data["elements"][1]["params"]["T"] == pytest.approx(0.5)


@pytest.mark.parametrize(
    "args",
    [
        ["--kind", "optimal", "-n", "2", "-m", "1"],
        ["--kind", "hm", "-n", "3"],
        ["--kind", "hm", "-n", "2", "-m", "3"],
        ["--kind", "bogus", "-n", "2"],
        ["--kind", "optimal", "-n", "0"],
    ],
)
def test_build_usage_errors(runner, args):
    assert runner.invoke(cli, ["build", *args]).exit_code == 2


def test_hm_round_trips_through_eval(runner, tmp_path):
    path = _build(runner, tmp_path, "--kind", "hm", "-n", "3", "-m", "2")
    res = runner.invoke(cli, ["eval", "-c", str(path)])
    assert res.exit_code == 0, res.output
    assert json.loads(res.stdout)["exact_w"] is True


def test_eval_optimal_n1_N4(runner, tmp_path):
    path = _build(runner, tmp_path, "--kind", "optimal", "-n", "1")
    res = runner.invoke(cli, ["eval", "-c", str(path), "-N", "4"])
    assert res.exit_code == 0
    assert json.loads(res.stdout)["p_suc"] == pytest.approx(0.25, abs=1e-12)


def test_eval_lossy_n2(runner, tmp_path):
    path = _build(runner, tmp_path, "--kind", "lossy", "-n", "2")
    rep = json.loads(runner.invoke(cli, ["eval", "-c", str(path), "-N", "2"]).stdout)
    assert rep["p_suc"] == pytest.approx(128 * 4 / (2187 * 2), abs=1e-12)


def test_eval_balanced_circuit_exits_3(runner, tmp_path):
    doc = {
        "n": 1,
        "width": 2,
        "output_modes": [1, 2],
        "elements": [{"kind": "pdbs", "modes": [1, 2], "params": {"T_H": 0.5, "T_V": 0.5}}],
        "label": "balanced",
    }
    path = tmp_path / "b.json"
    path.write_text(json.dumps(doc))
    res = runner.invoke(cli, ["eval", "-c", str(path)])
    assert res.exit_code == 3
    rep = json.loads(res.stdout)
    assert rep["exact_w"] is False and rep["violations"]


@pytest.mark.parametrize("text", ["{broken", '{"n": 1}', '{"n": 1, "width": 2, "output_modes": [1, 2], "elements": [], "label": "", "x": 0}'])
def test_eval_malformed_exits_2(runner, tmp_path, text):
    path = tmp_path / "bad.json"
    path.write_text(text)
    res = runner.invoke(cli, ["eval", "-c", str(path)])
    assert res.exit_code == 2
    assert "error" in res.stderr
    assert res.stdout == ""


def test_eval_rejects_small_N(runner, tmp_path):
    path = _build(runner, tmp_path, "--kind", "optimal", "-n", "1")
    assert runner.invoke(cli, ["eval", "-c", str(path), "-N", "1"]).exit_code == 2


def test_eval_help_states_default_N(runner):
    assert "default 2" in runner.invoke(cli, ["eval", "--help"]).output


def test_scan_csv(runner):
    res = runner.invoke(cli, ["scan", "--n-max", "3", "--N-max", "6", "--format", "csv"])
    assert res.exit_code == 0
    rows = list(csv.DictReader(io.StringIO(res.stdout)))
    assert len(rows) == 3 * 5
    by = {(int(r["n"]), int(r["N"])): r for r in rows}
    assert float(by[1, 2]["P_max"]) == pytest.approx(0.3, abs=1e-15)
    assert float(by[2, 2]["P_max"]) == pytest.approx(0.128, abs=1e-15)
    for n in (1, 2, 3):
        col = [float(by[n, N]["P_max"]) for N in range(2, 7)]
        assert all(a > b for a, b in zip(col, col[1:]))
    assert all(float(r["P_max"]) >= float(r["P_lossy"]) for r in rows)


def test_scan_json(runner):
    rows = json.loads(runner.invoke(cli, ["scan", "--n-max", "2", "--N-max", "2", "--format", "json"]).stdout)
    assert [(r["n"], r["N"]) for r in rows] == [(1, 2), (2, 2)]


def test_optimize(runner, tmp_path):
    trace = tmp_path / "trace.csv"
    res = runner.invoke(cli, ["optimize", "-n", "2", "--restarts", "2", "--seed", "1", "--trace", str(trace)])
    assert res.exit_code == 0
    out = json.loads(res.stdout)
    assert out["best_H"] == pytest.approx(0.032, abs=1e-9)
    assert out["classification"] == "lossless_m" and out["m"] == 1
    assert trace.read_text().startswith("restart,iteration,H")


def test_verify_engine_subset(runner):
    res = runner.invoke(cli, ["verify", "-n", "3", "--n-max", "8"])
    assert res.exit_code == 0, res.stderr
    rep = json.loads(res.stdout)
    assert rep["passed"] and len(rep["checks"]) == 7


def test_verify_tamper_fails_saturation(runner):
    res = runner.invoke(cli, ["verify", "--engine-n-max", "2", "--n-max", "4", "--tamper"])
    assert res.exit_code == 3
    failed = [c["name"] for c in json.loads(res.stdout)["checks"] if not c["passed"]]
    assert failed == ["expansion.saturation"]
    assert "FAIL" in res.stderr


def test_no_subcommand_is_usage_error(runner):
    assert runner.invoke(cli, ["frobnicate"]).exit_code == 2
