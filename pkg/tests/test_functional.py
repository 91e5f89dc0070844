"""Tests for the energy functional, its derivative and the residual."""

import numpy as np
import pytest

from src.core.calculus import VertexFunction
from src.core.exceptions import NonFiniteValueError, ParameterError
from src.core.functional import (
    Functional,
    State,
    coercivity_lower_bound,
    d_energy,
    energy,
    fd_check,
    gradient,
    residual,
    w_norm,
)
from src.core.graph import WeightedGraph
from src.core.nonlinearity import ExpressionNonlinearity
from src.core.problem import ProblemSpec


def _single_vertex(F="0", Fs="0", Ft="0", h1=3.0):
    g = WeightedGraph(["a"], [1.0], [])
    return ProblemSpec(
        graph=g,
        p=2.0,
        q=2.0,
        h1=VertexFunction.constant(g, h1),
        h2=VertexFunction.constant(g, 1.0),
        e1=VertexFunction.constant(g, 1.0),
        e2=VertexFunction.zeros(g),
        lambda1=1.0,
        lambda2=1.0,
        nonlinearity=ExpressionNonlinearity(g, F, Fs, Ft),
    )


def _state(spec, u, v):
    return State(VertexFunction(spec.graph, u), VertexFunction(spec.graph, v))


def test_energy_of_single_vertex_quadratic():
    spec = _single_vertex()
    # h u^2 / 2 - u at u = 1/3
    assert energy(spec, _state(spec, [1.0 / 3.0], [0.0])) == pytest.approx(-1.0 / 6.0)
    r = residual(spec, _state(spec, [1.0 / 3.0], [0.0]))
    assert r.sup == pytest.approx(0.0, abs=1e-15)


def test_zero_state_has_zero_energy(example51):
    assert energy(example51, State.zeros(example51.graph)) == 0.0


def test_residual_at_zero_is_minus_the_load(example51):
    r = residual(example51, State.zeros(example51.graph))
    np.testing.assert_allclose(r.r_u.values, -example51.lambda1 * example51.e1.values)
    np.testing.assert_allclose(r.r_v.values, -example51.lambda2 * example51.e2.values)
    assert r.sup == pytest.approx(1.0)


def test_gradient_is_measure_weighted_residual(rng):
    g = WeightedGraph(["a", "b"], [2.0, 0.5], [("a", "b", 1.0)])
    spec = ProblemSpec(
        graph=g,
        p=3.0,
        q=2.0,
        h1=VertexFunction.constant(g, 1.0),
        h2=VertexFunction.constant(g, 1.0),
        e1=VertexFunction.constant(g, 1.0),
        e2=VertexFunction.zeros(g),
        lambda1=1.0,
        lambda2=1.0,
        nonlinearity=ExpressionNonlinearity(g, "s^2 * t^2", "2*s*t^2", "2*s^2*t"),
    )
    state = State.from_vector(g, rng.standard_normal(4))
    grad = gradient(spec, state)
    r = residual(spec, state)
    np.testing.assert_allclose(grad.u.values, g.mu * r.r_u.values)
    np.testing.assert_allclose(grad.v.values, g.mu * r.r_v.values)
    direction = State.from_vector(g, rng.standard_normal(4))
    expected = float(np.dot(grad.to_vector(), direction.to_vector()))
    assert d_energy(spec, state, direction) == pytest.approx(expected, rel=1e-10, abs=1e-12)


def test_finite_differences_on_examples(example51, example52, rng):
    for spec in (example51, example52):
        for _ in range(20):
            state = State.from_vector(spec.graph, rng.uniform(-1.0, 1.0, 2 * spec.graph.n))
            check = fd_check(spec, state, n_directions=50, seed=int(rng.integers(1 << 30)))
            assert check.n_directions == 50
            assert check.max_rel_err <= 1e-5


def test_fd_check_rejects_bad_step(example51):
    with pytest.raises(ParameterError):
        fd_check(example51, State.zeros(example51.graph), step=0.0)


def test_w_norm_adds_channel_norms(example52):
    g = example52.graph
    spike = VertexFunction.indicator(g, "c")
    functional = Functional(example52)
    a, b = functional.channel_norms(State(spike, VertexFunction.zeros(g)).to_vector())
    assert a == pytest.approx(np.sqrt(3.0 + 1.5))
    assert b == 0.0
    assert w_norm(example52, State(spike, spike)) == pytest.approx(a + (2.898 + 1.5) ** (1.0 / 3.0), rel=1e-3)


def test_overflow_gives_infinite_energy(example51):
    g = example51.graph
    state = State(VertexFunction.zeros(g), VertexFunction.indicator(g, "v0") * 1e150)
    assert energy(example51, state) == float("inf")


def test_non_finite_nonlinearity_raises():
    spec = _single_vertex(F="s^2 * ln(1 + t)")
    with pytest.raises(NonFiniteValueError) as info:
        energy(spec, _state(spec, [1.0], [-2.0]))
    assert info.value.vertex == "a"


def test_coercivity_lower_bound_on_rays(example51, rng):
    for _ in range(20):
        direction = rng.standard_normal(2 * example51.graph.n)
        for t in (0.1, 1.0, 10.0, 100.0):
            state = State.from_vector(example51.graph, t * direction)
            assert coercivity_lower_bound(example51, state).holds


def test_energy_grows_along_rays_in_the_coercive_case(example51, rng):
    direction = rng.standard_normal(2 * example51.graph.n)
    values = [energy(example51, State.from_vector(example51.graph, t * direction)) for t in (10.0, 100.0, 1000.0)]
    assert values[0] < values[1] < values[2]


def test_energy_is_larger_far_out_on_random_rays(example51, rng):
    functional = Functional(example51)
    for _ in range(200):
        direction = rng.standard_normal(2 * example51.graph.n)
        assert functional.energy(1000.0 * direction) > functional.energy(direction)


def test_state_requires_a_common_graph(path9, star3):
    with pytest.raises(ValueError):
        State(VertexFunction.zeros(path9), VertexFunction.zeros(star3))
