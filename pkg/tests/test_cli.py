"""Tests for the command-line front end."""

import csv
import json

import pytest

from src.services.config_service import ConfigService
from src.ui.cli import EXIT_BAD_INPUT, EXIT_FAILED, EXIT_OK, build_parser, run

STAR_PROBLEM = {
    "preset": "example52",
    "graph": {"generator": "star", "leaves": 3},
    "anchors": {"x1": "c", "x2": "l1"},
}

PATH_PROBLEM = {
    "preset": "example51",
    "graph": {"generator": "path", "n": 9},
    "anchors": {"x1": "v0", "x2": "v8"},
}

SINGLE_VERTEX_PROBLEM = {
    "graph": {"vertices": [{"id": "a"}], "edges": []},
    "p": 2,
    "q": 2,
    "h1": 3,
    "e1": 1,
    "lambda": 1,
    "F": {"preset": "zero"},
}


@pytest.fixture
def small_config(tmp_path, monkeypatch):
    monkeypatch.delenv("GRAPHPQ_THREADS", raising=False)
    path = tmp_path / "tool.json"
    path.write_text(json.dumps({"audit": {"points": 11, "random_points": 100}, "solver": {"restarts": 2}}))
    return ConfigService(path)


def _write(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def _stdout_json(capsys):
    return json.loads(capsys.readouterr().out)


def test_parser_requires_a_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])
    args = build_parser().parse_args(["solve", "--mode", "sub", "--lambda", "0.5"])
    assert args.lam == 0.5


def test_params_prints_constants(tmp_path, capsys, small_config):
    problem = _write(tmp_path, "star.json", STAR_PROBLEM)
    assert run(["params", "--problem", problem], small_config) == EXIT_OK
    result = _stdout_json(capsys)
    assert result["M"] == pytest.approx(4.75)
    assert result["D1"] == pytest.approx(6.0)
    assert result["rho"] > 0 and result["alpha"] > 0
    assert "coercivity" in result["unavailable"]
    assert result["palais_smale"]["c_u"] > 0


def test_missing_graph_is_bad_input(tmp_path, capsys, small_config):
    problem = _write(tmp_path, "problem.json", dict(STAR_PROBLEM, graph="absent.json"))
    assert run(["params", "--problem", problem], small_config) == EXIT_BAD_INPUT
    assert "graphpq: error" in capsys.readouterr().err


def test_missing_problem_file_is_bad_input(tmp_path, small_config):
    assert run(["audit", "--problem", str(tmp_path / "nope.json")], small_config) == EXIT_BAD_INPUT


def test_bad_expression_is_bad_input(tmp_path, small_config):
    config = dict(SINGLE_VERTEX_PROBLEM, F={"expr": {"F": "s ^", "Fs": "0", "Ft": "0"}})
    problem = _write(tmp_path, "expr.json", config)
    assert run(["check", "--problem", problem], small_config) == EXIT_BAD_INPUT


def test_violated_hypothesis_fails_validation(tmp_path, capsys, small_config):
    problem = _write(tmp_path, "h.json", dict(SINGLE_VERTEX_PROBLEM, h1=-1))
    assert run(["check", "--problem", problem], small_config) == EXIT_FAILED
    assert "(H₁) violated" in capsys.readouterr().err


def test_check_runs_the_invariant_suite(tmp_path, capsys, small_config):
    problem = _write(tmp_path, "path.json", PATH_PROBLEM)
    assert run(["check", "--problem", problem], small_config) == EXIT_OK
    result = _stdout_json(capsys)
    assert result["graph"]["valid"]
    assert all(entry["holds"] for entry in result["invariants"])


def test_check_reports_invalid_graph(tmp_path, capsys, small_config):
    graph = _write(
        tmp_path,
        "graph.json",
        {"vertices": [{"id": "a"}, {"id": "b"}], "edges": []},
    )
    assert run(["check", "--graph", graph], small_config) == EXIT_FAILED
    assert "disconnected" in _stdout_json(capsys)["graph"]["violations"]


def test_audit_writes_report(tmp_path, small_config):
    problem = _write(tmp_path, "path.json", PATH_PROBLEM)
    out = tmp_path / "audit.json"
    assert run(["audit", "--problem", problem, "--out", str(out)], small_config) == EXIT_OK
    report = json.loads(out.read_text())
    verdicts = {entry["condition"]: entry["verdict"] for entry in report["results"]}
    assert verdicts["F1"] == "holds"


def test_solve_then_verify(tmp_path, small_config):
    problem = _write(tmp_path, "single.json", SINGLE_VERTEX_PROBLEM)
    out = tmp_path / "run" / "report.json"
    assert run(["solve", "--problem", problem, "--mode", "sub", "--out", str(out)], small_config) == EXIT_OK

    report = json.loads(out.read_text())
    assert report["mode"] == "minimize"
    assert report["state"]["u"]["a"] == pytest.approx(1.0 / 3.0, abs=1e-8)

    csv_path = out.with_suffix(".csv")
    with open(csv_path, newline="") as f:
        assert next(csv.reader(f)) == ["vertex_id", "u", "v", "r_u", "r_v"]

    for solution in (out, csv_path):
        verified = tmp_path / "verify.json"
        code = run(
            ["verify", "--problem", problem, "--solution", str(solution), "--out", str(verified)],
            small_config,
        )
        assert code == EXIT_OK
        assert json.loads(verified.read_text())["residual_sup"] <= 1e-9


def test_verify_fails_for_a_wrong_state(tmp_path, small_config):
    problem = _write(tmp_path, "single.json", SINGLE_VERTEX_PROBLEM)
    solution = _write(tmp_path, "wrong.json", {"state": {"u": {"a": 1.0}, "v": {"a": 0.0}}})
    assert run(["verify", "--problem", problem, "--solution", solution], small_config) == EXIT_FAILED


def test_grad_check(tmp_path, capsys, small_config):
    problem = _write(tmp_path, "path.json", PATH_PROBLEM)
    assert run(["grad-check", "--problem", problem, "--directions", "10"], small_config) == EXIT_OK
    assert _stdout_json(capsys)["max_rel_err"] <= 1e-5


def test_lambda_override(tmp_path, capsys, small_config):
    problem = _write(tmp_path, "star.json", STAR_PROBLEM)
    assert run(["params", "--problem", problem, "--lambda", "1e-9"], small_config) == EXIT_OK
    assert _stdout_json(capsys)["lambda1"] == 1e-9


def test_usage_errors_are_bad_input(capsys, small_config):
    assert run(["solve", "--mode", "nonsense"], small_config) == EXIT_BAD_INPUT
    assert run(["--no-such-flag"], small_config) == EXIT_BAD_INPUT
    assert run([], small_config) == EXIT_BAD_INPUT
    assert "usage: graphpq" in capsys.readouterr().err
    assert run(["--help"], small_config) == EXIT_OK


def test_audit_reports_the_sampled_form_of_c4(tmp_path, capsys, small_config):
    problem = _write(tmp_path, "star.json", STAR_PROBLEM)
    out = tmp_path / "audit.json"
    run(["audit", "--problem", problem, "--out", str(out)], small_config)
    assert "graphpq: note: C4 checked as F(x4,s,s) >= -K3 |s|^beta3" in capsys.readouterr().err
    report = json.loads(out.read_text())
    assert len(report["caveats"]) == 1
    assert report["caveats"][0].startswith("C4 checked as")
    c4 = next(entry for entry in report["results"] if entry["condition"] == "C4")
    assert "not the stated F(x4,s,s) >= K3 |s|^beta3" in c4["checked_form"]
