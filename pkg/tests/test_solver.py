"""Tests for the critical-point searches and the state classification."""

import dataclasses
import json

import numpy as np
import pytest

from src.core.calculus import VertexFunction
from src.core.exceptions import EndpointNotFoundError, ParameterError, SolverPreconditionError
from src.core.functional import Functional, State, energy, residual
from src.core.graph import WeightedGraph, star_graph
from src.core.nonlinearity import ExpressionNonlinearity, ZeroNonlinearity
from src.core.params import rho_alpha
from src.core.problem import ProblemSpec, preset_example52
from src.core.solver import (
    BoundCheck,
    Classification,
    SolveMode,
    SolveOptions,
    ball_projection,
    classify,
    descend,
    find_endpoint,
    minimize_global,
    minimize_in_ball,
    mountain_pass,
)
from src.services.config_service import ConfigService


def _single_vertex(F="0", Fs="0", lam=1.0):
    g = WeightedGraph(["a"], [1.0], [])
    return ProblemSpec(
        graph=g,
        p=2.0,
        q=2.0,
        h1=VertexFunction.constant(g, 3.0 if F == "0" else 1.0),
        h2=VertexFunction.constant(g, 1.0),
        e1=VertexFunction.constant(g, 1.0),
        e2=VertexFunction.zeros(g),
        lambda1=lam,
        lambda2=1.0,
        nonlinearity=ExpressionNonlinearity(g, F, Fs, "0"),
    )


# ─── Options ──────────────────────────────────────────────────────────────


def test_options_are_validated():
    with pytest.raises(ParameterError):
        SolveOptions(grad_tol=0.0)
    with pytest.raises(ParameterError):
        SolveOptions(armijo_shrink=1.0)
    with pytest.raises(ParameterError):
        SolveOptions(path_nodes=2)
    with pytest.raises(ParameterError):
        SolveOptions(threads=0)


def test_options_from_config_skip_none_overrides(tmp_path, monkeypatch):
    monkeypatch.delenv("GRAPHPQ_THREADS", raising=False)
    config = ConfigService(tmp_path / "config.json")
    opts = SolveOptions.from_config(config, grad_tol=1e-6, seed=None)
    assert opts.grad_tol == 1e-6
    assert opts.seed == 0
    assert opts.max_iters == 100000
    assert opts.threads is None


# ─── Global minimisation ──────────────────────────────────────────────────


def test_single_vertex_minimum():
    spec = _single_vertex()
    report = minimize_global(spec, SolveOptions(restarts=2))
    assert report.converged
    assert report.mode is SolveMode.MINIMIZE
    assert report.state.u["a"] == pytest.approx(1.0 / 3.0, abs=1e-8)
    assert report.energy == pytest.approx(-1.0 / 6.0, abs=1e-12)
    assert report.classification is Classification.SEMI_TRIVIAL_U
    assert report.residual_sup <= 1e-9


def test_report_fields_are_recomputed_from_the_state():
    spec = _single_vertex()
    report = minimize_global(spec, SolveOptions(restarts=1))
    assert report.energy == energy(spec, report.state)
    assert report.residual_sup == residual(spec, report.state).sup
    assert set(report.to_dict()) == {
        "state",
        "energy",
        "residual_sup",
        "iterations",
        "classification",
        "bound_checks",
        "mode",
        "converged",
        "diagnostics",
    }
    assert report.to_dict()["state"]["u"].keys() == {"a"}


def test_nonconvergence_is_flagged_not_raised():
    report = minimize_global(_single_vertex(), SolveOptions(max_iters=1, restarts=0))
    assert not report.converged
    assert any("converge" in d for d in report.diagnostics)


def test_example51_global_minimum(example51):
    report = minimize_global(example51, SolveOptions(restarts=2, grad_tol=1e-8))
    assert report.converged
    assert report.residual_sup <= 1e-8
    assert report.energy < 0
    assert report.classification is Classification.NONTRIVIAL


def test_descent_history_is_nonincreasing(example51, rng):
    functional = Functional(example51)
    run = descend(functional, rng.uniform(-1.0, 1.0, 2 * example51.graph.n), SolveOptions(max_iters=200))
    assert all(b <= a for a, b in zip(run.history, run.history[1:]))


# ─── Endpoint and mountain pass ───────────────────────────────────────────


def test_endpoint_on_star(example52):
    search = find_endpoint(example52)
    assert search.s == 1.0
    assert energy(example52, search.state) == pytest.approx(search.trace[-1].energy)
    assert search.trace[-1].energy < 0
    assert search.trace[-1].bound >= search.trace[-1].energy


def test_endpoint_errors(example52):
    with pytest.raises(ParameterError):
        find_endpoint(example52, x3="l2")
    flat = example52.with_nonlinearity(ZeroNonlinearity(example52.graph))
    with pytest.raises(EndpointNotFoundError):
        find_endpoint(flat)
    bare = dataclasses.replace(example52, hypothesis=dataclasses.replace(example52.hypothesis, l0=None))
    with pytest.raises(ParameterError):
        find_endpoint(bare)


def test_mountain_pass_needs_a_negative_endpoint(example52):
    with pytest.raises(SolverPreconditionError):
        mountain_pass(example52, State.zeros(example52.graph))


def test_mountain_pass_on_a_single_vertex():
    lam = 0.01
    spec = _single_vertex(F="s^4", Fs="4*s^3", lam=lam)
    one = VertexFunction.constant(spec.graph, 1.0)
    endpoint = State(one, VertexFunction.zeros(spec.graph))
    report = mountain_pass(spec, endpoint, SolveOptions(path_nodes=11))

    # critical points of u^2/2 - u^4 - lam u solve 4u^3 - u + lam = 0; the largest is the pass
    roots = np.sort(np.real(np.roots([4.0, 0.0, -1.0, lam])))
    assert report.converged
    assert report.state.u["a"] == pytest.approx(roots[-1], abs=1e-6)
    assert report.state.v["a"] == pytest.approx(0.0, abs=1e-12)
    assert report.energy > 0
    assert report.classification is Classification.SEMI_TRIVIAL_U


@pytest.fixture(scope="module")
def star_runs():
    """Two mountain-pass runs and two ball runs on the star preset with identical options."""
    spec = preset_example52(star_graph(3), "c", "l1")
    barrier = rho_alpha(spec, spec.hypothesis.l0, spec.lambda1)
    endpoint = find_endpoint(spec).state
    passes = [mountain_pass(spec, endpoint, SolveOptions(), barrier) for _ in range(2)]
    balls = [minimize_in_ball(spec, barrier.rho, SolveOptions(restarts=2)) for _ in range(2)]
    return spec, passes, balls


def test_mountain_pass_on_star(star_runs):
    spec, (report, _), (ball, _) = star_runs
    assert report.mode is SolveMode.MOUNTAIN_PASS
    assert report.converged, report.diagnostics
    assert report.energy > 0
    assert report.residual_sup <= 1e-6
    assert ball.converged, ball.diagnostics
    assert ball.energy < 0
    assert ball.residual_sup <= 1e-6
    distance = Functional(spec).w_norm(report.state.to_vector() - ball.state.to_vector())
    assert distance > 10 * SolveOptions().grad_tol
    names = [check.name for check in report.bound_checks]
    assert "mountain-pass energy > 0" in names
    assert "energy >= alpha - grad_tol rho" in names


def test_star_runs_are_reproducible(star_runs):
    _, passes, balls = star_runs
    for first, second in (passes, balls):
        assert json.dumps(first.to_dict()) == json.dumps(second.to_dict())


# ─── Ball minimisation ────────────────────────────────────────────────────


def test_ball_projection_lands_on_the_sphere(example52, rng):
    functional = Functional(example52)
    project = ball_projection(functional, 0.01)
    x = rng.standard_normal(2 * example52.graph.n)
    assert functional.w_norm(project(x)) == pytest.approx(0.01)
    small = 1e-6 * x
    np.testing.assert_array_equal(project(small), small)
    with pytest.raises(ParameterError):
        ball_projection(functional, 0.0)


def test_ball_minimum_is_negative_and_inside(example52):
    barrier = rho_alpha(example52, example52.hypothesis.l0, example52.lambda1)
    report = minimize_in_ball(example52, barrier.rho, SolveOptions(restarts=2))
    assert report.mode is SolveMode.BALL
    assert report.energy < 0
    checks = {check.name: check for check in report.bound_checks}
    assert checks["W-norm <= rho"].holds
    assert checks["ball minimum energy < 0"].holds


# ─── Classification ───────────────────────────────────────────────────────


def test_classify_trivial_and_nontrivial(example51):
    g = example51.graph
    assert classify(example51, State.zeros(g)) == (Classification.TRIVIAL, [])
    spike = VertexFunction.indicator(g, "v0")
    assert classify(example51, State(spike, spike))[0] is Classification.NONTRIVIAL


def test_classify_semitrivial_checks_both_bounds(example51):
    g = example51.graph
    state = State(VertexFunction.indicator(g, "v0") * 0.5, VertexFunction.zeros(g))
    classification, checks = classify(example51, state)
    assert classification is Classification.SEMI_TRIVIAL_U
    assert [c.name for c in checks] == ["||u||_inf bound (F1)", "||u||_inf bound (F1')"]
    assert checks[0].rhs == pytest.approx(np.sqrt(2.0))
    assert all(c.holds for c in checks)

    state = State(VertexFunction.zeros(g), VertexFunction.indicator(g, "v8") * 10.0)
    classification, checks = classify(example51, state)
    assert classification is Classification.SEMI_TRIVIAL_V
    assert checks[0].lhs == 10.0
    assert not checks[0].holds


def test_missing_bound_data_is_not_applicable(example52):
    g = example52.graph
    state = State(VertexFunction.indicator(g, "c"), VertexFunction.zeros(g))
    _, checks = classify(example52, state)
    assert all(c.holds is None for c in checks)
    assert checks[0].to_dict()["rhs"] is None


def test_bound_check_serialises_finite_rhs():
    check = BoundCheck("W-norm <= rho", 0.5, 1.0, True)
    assert check.to_dict() == {"name": "W-norm <= rho", "lhs": 0.5, "rhs": 1.0, "holds": True}
