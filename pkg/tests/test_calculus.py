"""Tests for the discrete calculus operators and norms."""

import math

import numpy as np
import pytest

from src.core.calculus import (
    VertexFunction,
    calculus_invariants,
    check_embedding,
    embedding_constant,
    gamma,
    gamma_field,
    grad_len,
    grad_len_field,
    gradient_power,
    integrate,
    laplacian_field,
    lp_norm,
    p_laplacian,
    p_laplacian_field,
    sobolev_norm,
)
from src.core.exceptions import NonFiniteValueError, ParameterError
from src.core.graph import WeightedGraph, path_graph, random_connected_graph, star_graph


def _two_vertices():
    return WeightedGraph(["a", "b"], [1.0, 1.0], [("a", "b", 1.0)])


def test_gamma_on_two_vertices():
    g = _two_vertices()
    u = VertexFunction(g, [0.0, 1.0])
    assert gamma(g, u, u, "a") == pytest.approx(0.5)
    assert grad_len(g, u, "a") == pytest.approx(math.sqrt(0.5))


def test_constant_function_has_zero_gradient_and_laplacian():
    g = star_graph(4)
    u = VertexFunction.constant(g, 3.0)
    np.testing.assert_array_equal(grad_len_field(g, u), 0.0)
    np.testing.assert_allclose(p_laplacian_field(g, u, 3.0), 0.0, atol=1e-15)


def test_laplacian_of_spike_on_star():
    g = star_graph(3)
    spike = VertexFunction.indicator(g, "c")
    np.testing.assert_allclose(laplacian_field(g, spike), [-3.0, 1.0, 1.0, 1.0])
    assert p_laplacian(g, spike, 2.0, "c") == pytest.approx(-3.0)


def test_gradient_power_conventions():
    glen = np.array([0.0, 2.0])
    np.testing.assert_array_equal(gradient_power(glen, 2.0), [1.0, 1.0])
    np.testing.assert_array_equal(gradient_power(glen, 4.0), [0.0, 4.0])


def test_p_laplacian_rejects_small_exponent():
    g = _two_vertices()
    with pytest.raises(ParameterError):
        p_laplacian_field(g, [0.0, 1.0], 1.5)


def test_identities_on_random_graphs(rng):
    for _ in range(200):
        g = random_connected_graph(int(rng.integers(2, 26)), rng, weight_range=(1e-3, 2.0))
        u, v, w = (rng.standard_normal(g.n) for _ in range(3))
        a, b = rng.standard_normal(2)

        lhs = gamma_field(g, a * u + b * w, v)
        rhs = a * gamma_field(g, u, v) + b * gamma_field(g, w, v)
        np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-12 * (1 + np.max(np.abs(rhs))))

        assert np.all(gamma_field(g, u, v) <= grad_len_field(g, u) * grad_len_field(g, v) + 1e-12)
        excess = np.abs(grad_len_field(g, w) - grad_len_field(g, u)) - grad_len_field(g, w - u)
        assert np.all(excess <= 1e-12)

        for p in (2.0, 2.5, 3.0, 4.0):
            left = integrate(g, p_laplacian_field(g, u, p) * v)
            right = -integrate(g, gradient_power(grad_len_field(g, u), p) * gamma_field(g, u, v))
            assert abs(left - right) <= 1e-10 * (1 + abs(right))

        np.testing.assert_allclose(p_laplacian_field(g, u, 2.0), laplacian_field(g, u), rtol=0, atol=1e-12)


def test_lp_norms():
    g = WeightedGraph(["a", "b"], [1.0, 2.0], [("a", "b", 1.0)])
    u = VertexFunction(g, [3.0, -1.0])
    assert lp_norm(g, u, 2.0) == pytest.approx(math.sqrt(11.0))
    assert lp_norm(g, u, math.inf) == 3.0
    with pytest.raises(ParameterError):
        lp_norm(g, u, 1.0)


def test_sobolev_norm_of_spike():
    g = _two_vertices()
    spike = VertexFunction.indicator(g, "a")
    h = VertexFunction.constant(g, 2.0)
    # |grad|^2 = 1/2 at both vertices, h|u|^2 = 2 at a
    assert sobolev_norm(g, spike, 2.0, h) == pytest.approx(math.sqrt(3.0))


def test_embedding_constants():
    assert embedding_constant("sup", 2.0, math.inf, 4.0, 1.0) == pytest.approx(0.5)
    assert embedding_constant("lr", 2.0, 2.0, 4.0, 1.0) == pytest.approx(0.5)
    assert embedding_constant("lr", 2.0, math.inf, 4.0, 1.0) == pytest.approx(0.5)
    with pytest.raises(ParameterError):
        embedding_constant("lr", 3.0, 2.0, 1.0, 1.0)
    with pytest.raises(ParameterError):
        embedding_constant("other", 2.0, 2.0, 1.0, 1.0)


def test_embeddings_hold_on_random_instances(rng):
    for _ in range(1000):
        g = random_connected_graph(int(rng.integers(2, 12)), rng)
        u = rng.standard_normal(g.n)
        h = rng.uniform(0.1, 5.0, g.n)
        s = float(rng.choice([2.0, 2.5, 3.0]))
        for r in (s, 2.0 * s, math.inf):
            assert check_embedding(g, u, s, r, h).holds


def test_vertex_function_rejects_non_finite_values():
    g = _two_vertices()
    with pytest.raises(NonFiniteValueError) as info:
        VertexFunction(g, [1.0, float("nan")])
    assert info.value.vertex == "b"


def test_vertex_function_arithmetic_and_mapping():
    g = path_graph(3)
    u = VertexFunction.from_mapping(g, {"v0": 1.0, "v1": 2.0, "v2": 3.0})
    w = 2 * u - VertexFunction.constant(g, 1.0)
    assert w.to_dict() == {"v0": 1.0, "v1": 3.0, "v2": 5.0}
    assert (-w)["v2"] == -5.0
    with pytest.raises(ValueError):
        VertexFunction.from_mapping(g, {"v0": 1.0})


def test_invariant_suite_passes(rng):
    g = random_connected_graph(12, rng)
    checks = calculus_invariants(g, h=np.full(g.n, 2.0), trials=5)
    assert {c.name for c in checks} >= {"green formula", "embedding"}
    assert all(c.holds for c in checks)
