"""Tests for problem specifications, presets and configuration loading."""

import json

import numpy as np
import pytest

from src.core.calculus import VertexFunction
from src.core.exceptions import (
    ExpressionParseError,
    GraphFormatError,
    InputFileError,
    ProblemConfigError,
    UnknownVertexError,
)
from src.core.graph import path_graph
from src.core.nonlinearity import (
    Example51Nonlinearity,
    Example52Nonlinearity,
    ExpressionNonlinearity,
    ZeroNonlinearity,
)
from src.core.problem import (
    ProblemSpec,
    example52_potential,
    load_problem,
    preset_single_equation,
    vertex_function_from_config,
)
from src.services.io_service import graph_to_dict


def _custom(graph, **overrides):
    spec = dict(
        graph=graph,
        p=2.0,
        q=3.0,
        h1=VertexFunction.constant(graph, 1.0),
        h2=VertexFunction.constant(graph, 1.0),
        e1=VertexFunction.constant(graph, 1.0),
        e2=VertexFunction.zeros(graph),
        lambda1=1.0,
        lambda2=1.0,
        nonlinearity=ZeroNonlinearity(graph),
    )
    spec.update(overrides)
    return ProblemSpec(**spec)


def test_h0_defaults_to_smallest_potential(path9):
    spec = _custom(path9, h2=VertexFunction.constant(path9, 0.5))
    assert spec.h0 == 0.5
    assert spec.mu0 == 1.0


def test_nonpositive_potential_names_the_hypothesis(path9):
    h = VertexFunction(path9, [1.0] * 8 + [0.0])
    with pytest.raises(ProblemConfigError, match=r"\(H₁\) violated"):
        _custom(path9, h1=h)


def test_declared_h0_above_the_floor_is_rejected(path9):
    with pytest.raises(ProblemConfigError, match=r"\(H₁\) violated"):
        _custom(path9, h0=2.0)


def test_zero_perturbations_are_rejected(path9):
    with pytest.raises(ProblemConfigError, match="perturbations identically zero"):
        _custom(path9, e1=VertexFunction.zeros(path9))
    spec = _custom(path9, e1=VertexFunction.zeros(path9), strict=False)
    assert spec.name == "custom"


def test_exponents_and_parameters_are_validated(path9):
    with pytest.raises(ProblemConfigError):
        _custom(path9, p=1.5)
    with pytest.raises(ProblemConfigError):
        _custom(path9, lambda2=0.0)


def test_nonlinearity_must_vanish_at_origin(path9):
    F = ExpressionNonlinearity(path9, "1 + s", "1", "0")
    with pytest.raises(ProblemConfigError, match="F\\(x,0,0\\) = 0"):
        _custom(path9, nonlinearity=F)


def test_functions_on_another_graph_are_rejected(path9):
    other = path_graph(9)
    with pytest.raises(ProblemConfigError):
        _custom(path9, h1=VertexFunction.constant(other, 1.0))


def test_with_lambda_copies(path9):
    spec = _custom(path9)
    copy = spec.with_lambda(0.25)
    assert (copy.lambda1, copy.lambda2) == (0.25, 0.25)
    assert spec.lambda1 == 1.0


def test_example51_preset(example51):
    spec = example51
    assert (spec.p, spec.q) == (2.0, 3.0)
    assert spec.h0 == 3.0
    assert spec.h1["v0"] == 3.0 and spec.h1["v8"] == 11.0
    assert spec.h2["v8"] == 3.0
    np.testing.assert_array_equal(spec.e1.values, [1.0] + [0.0] * 7 + [1.0])
    assert isinstance(spec.nonlinearity, Example51Nonlinearity)
    assert spec.nonlinearity.support == ["v0", "v8"]


def test_example51_rejects_equal_anchors(path9):
    from src.core.problem import preset_example51

    with pytest.raises(ProblemConfigError):
        preset_example51(path9, "v0", "v0")


def test_example52_preset_on_star(example52):
    spec = example52
    assert spec.h1["c"] == pytest.approx(1.5)
    assert spec.h0 == 1.0
    assert isinstance(spec.nonlinearity, Example52Nonlinearity)
    assert spec.nonlinearity.M == pytest.approx(4.75)
    assert spec.hypothesis.l0 == pytest.approx(1.0 / 304.0)
    assert spec.lambda1 == spec.lambda2


def test_example52_potential_values(path9):
    h = example52_potential(path9, "v0", "v8", c1=2.0)
    # 2 dist(x, v0) - 1/(dist(x, v8) + 1) + 2
    assert h["v0"] == pytest.approx(2.0 - 1.0 / 9.0)
    assert h["v8"] == pytest.approx(17.0)
    with pytest.raises(ProblemConfigError):
        example52_potential(path9, "v0", "v8", c1=0.0)


def test_single_equation_has_trivial_v_channel(path9):
    from src.core.nonlinearity import ScalarNonlinearity, log_cubic

    spec = preset_single_equation(
        path9,
        2.0,
        VertexFunction.constant(path9, 1.0),
        VertexFunction.indicator(path9, "v4"),
        0.1,
        ScalarNonlinearity(path9, log_cubic(2.0), "log-cubic"),
    )
    assert spec.single_equation
    assert spec.q == spec.p
    assert not np.any(spec.e2.values)
    assert spec.lambda1 == 0.1


def test_vertex_function_forms(path9):
    anchors = {"x1": "v2"}
    assert vertex_function_from_config(path9, 2, anchors, "h")["v5"] == 2.0
    assert vertex_function_from_config(path9, {"constant": 3}, anchors, "h")["v0"] == 3.0
    spike = vertex_function_from_config(path9, {"indicator": ["x1"]}, anchors, "e")
    assert spike["v2"] == 1.0 and spike["v3"] == 0.0
    ramp = vertex_function_from_config(path9, {"dist": {"anchor": "x1", "offset": 1, "slope": 2}}, anchors, "h")
    assert ramp["v0"] == 5.0
    assert vertex_function_from_config(path9, {"preset": "3+dist", "anchor": "v8"}, anchors, "h")["v0"] == 11.0
    with pytest.raises(ProblemConfigError):
        vertex_function_from_config(path9, {"bogus": 1}, anchors, "h")
    with pytest.raises(ProblemConfigError):
        vertex_function_from_config(path9, "text", anchors, "h")


def _custom_config(graph):
    return {
        "graph": graph_to_dict(graph),
        "p": 2,
        "q": 2,
        "h1": 1,
        "e1": {"indicator": ["v0"]},
        "lambda": 0.5,
        "F": {"expr": {"F": "s^4", "Fs": "4*s^3", "Ft": "0"}},
        "hypothesis": {"nu": 4.0, "A": 0.5},
    }


def test_load_custom_problem(path9):
    spec = load_problem(_custom_config(path9))
    assert spec.graph.n == 9
    assert spec.lambda1 == spec.lambda2 == 0.5
    assert spec.h2["v3"] == 1.0
    assert not np.any(spec.e2.values)
    assert isinstance(spec.nonlinearity, ExpressionNonlinearity)
    assert spec.hypothesis.nu == 4.0


def test_load_problem_from_file_resolves_relative_graph(tmp_path, path9):
    (tmp_path / "graph.json").write_text(json.dumps(graph_to_dict(path9)))
    config = _custom_config(path9)
    config["graph"] = "graph.json"
    (tmp_path / "problem.json").write_text(json.dumps(config))
    spec = load_problem(tmp_path / "problem.json")
    assert spec.graph.vertices == path9.vertices


def test_load_preset_with_anchors(star3):
    config = {"preset": "example52", "anchors": {"x1": "c", "x2": "l1"}, "lambda_fraction": 0.25}
    spec = load_problem(config, graph=star3)
    assert spec.name == "example52"
    assert spec.nonlinearity.M == pytest.approx(4.75)


def test_load_problem_errors(tmp_path, path9):
    with pytest.raises(InputFileError):
        load_problem(tmp_path / "missing.json")
    with pytest.raises(GraphFormatError):
        load_problem({"p": 2})

    config = _custom_config(path9)
    config["h1"] = {"values": [1.0] * 8 + [-1.0]}
    with pytest.raises(ProblemConfigError, match=r"\(H₁\) violated"):
        load_problem(config)

    config = _custom_config(path9)
    config["e1"] = 0
    with pytest.raises(ProblemConfigError, match="perturbations identically zero"):
        load_problem(config)

    config = _custom_config(path9)
    del config["p"]
    with pytest.raises(ProblemConfigError, match="missing configuration entry"):
        load_problem(config)

    config = _custom_config(path9)
    config["F"] = {"expr": {"F": "s^^4", "Fs": "0", "Ft": "0"}}
    with pytest.raises(ExpressionParseError):
        load_problem(config)

    config = _custom_config(path9)
    config["e1"] = {"indicator": ["nowhere"]}
    with pytest.raises(UnknownVertexError):
        load_problem(config)

    config = _custom_config(path9)
    config["hypothesis"] = {"nu": 1.5}
    with pytest.raises(ProblemConfigError, match="nu > max"):
        load_problem(config)


def test_unknown_hypothesis_keys_are_rejected(path9):
    config = _custom_config(path9)
    config["hypothesis"] = {"colour": 1}
    with pytest.raises(ProblemConfigError, match="unknown hypothesis keys"):
        load_problem(config)


def test_non_strict_spec_admits_nonzero_F_at_origin(path9):
    F = ExpressionNonlinearity(path9, "1 + s", "1", "0")
    spec = _custom(path9, nonlinearity=F, strict=False)
    assert spec.nonlinearity.origin_violations() == list(path9.vertices)
