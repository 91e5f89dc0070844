"""
Discrete calculus on weighted graphs.

Provides the vertex-function value type and the operators built from edge
differences:
- Gradient form Gamma(u, v), gradient length |grad u|
- Graph Laplacian and the p-Laplacian (divergence form)
- mu-integration, L^r and W^{1,s}_h norms
- Embedding constants for W^{1,s}_h into L^r and L^infinity

Every operator is evaluated for all vertices at once through the signed
incidence matrix B of the graph ((B u)_e = u(head) - u(tail)); the
per-vertex functions index into those fields.
"""

import math
from dataclasses import dataclass
from typing import Iterable, List, Mapping, Optional, Union

import numpy as np

from src.core.exceptions import NonFiniteValueError, ParameterError
from src.core.graph import WeightedGraph


class VertexFunction:
    """
    A finite real function on every vertex of a graph.

    Values are stored densely in the graph's vertex order and are read-only.
    Supports addition, subtraction and scalar multiplication.
    """

    __slots__ = ("graph", "values")

    def __init__(self, graph: WeightedGraph, values: Iterable[float]) -> None:
        array = np.array(values, dtype=float)
        if array.shape != (graph.n,):
            raise ValueError(f"expected {graph.n} values, got shape {array.shape}")
        bad = np.flatnonzero(~np.isfinite(array))
        if bad.size:
            raise NonFiniteValueError("vertex function value", graph.vertices[bad[0]])
        array.flags.writeable = False
        self.graph = graph
        self.values = array

    @classmethod
    def constant(cls, graph: WeightedGraph, c: float) -> "VertexFunction":
        return cls(graph, np.full(graph.n, float(c)))

    @classmethod
    def zeros(cls, graph: WeightedGraph) -> "VertexFunction":
        return cls(graph, np.zeros(graph.n))

    @classmethod
    def indicator(cls, graph: WeightedGraph, *vertices: str) -> "VertexFunction":
        """1 on the given vertices, 0 elsewhere."""
        values = np.zeros(graph.n)
        for x in vertices:
            values[graph.index(x)] = 1.0
        return cls(graph, values)

    @classmethod
    def from_mapping(cls, graph: WeightedGraph, mapping: Mapping[str, float]) -> "VertexFunction":
        """Build from {vertex id: value}; every vertex must be present."""
        values = np.empty(graph.n)
        seen = set()
        for x, value in mapping.items():
            i = graph.index(x)
            values[i] = float(value)
            seen.add(i)
        if len(seen) != graph.n:
            missing = [graph.vertices[i] for i in range(graph.n) if i not in seen]
            raise ValueError(f"vertex function missing values for {missing[:5]}")
        return cls(graph, values)

    def __getitem__(self, x: str) -> float:
        return float(self.values[self.graph.index(x)])

    def to_dict(self) -> dict:
        return {x: float(value) for x, value in zip(self.graph.vertices, self.values)}

    def _coerce(self, other: "VertexFunction") -> np.ndarray:
        if other.graph is not self.graph:
            raise ValueError("vertex functions live on different graphs")
        return other.values

    def __add__(self, other: "VertexFunction") -> "VertexFunction":
        return VertexFunction(self.graph, self.values + self._coerce(other))

    def __sub__(self, other: "VertexFunction") -> "VertexFunction":
        return VertexFunction(self.graph, self.values - self._coerce(other))

    def __mul__(self, scalar: float) -> "VertexFunction":
        return VertexFunction(self.graph, float(scalar) * self.values)

    __rmul__ = __mul__

    def __neg__(self) -> "VertexFunction":
        return VertexFunction(self.graph, -self.values)

    def __repr__(self) -> str:
        return f"VertexFunction(n={self.graph.n})"


FunctionLike = Union[VertexFunction, np.ndarray, Iterable[float]]


def as_array(g: WeightedGraph, u: FunctionLike) -> np.ndarray:
    """Dense value array of u on g."""
    if isinstance(u, VertexFunction):
        if u.graph is not g and u.graph.vertices != g.vertices:
            raise ValueError("vertex function lives on a different graph")
        return u.values
    array = np.asarray(u, dtype=float)
    if array.shape != (g.n,):
        raise ValueError(f"expected {g.n} values, got shape {array.shape}")
    return array


def _check_exponent(p: float) -> None:
    if not p >= 2:
        raise ParameterError(f"exponent must be at least 2, got {p}")


# ─── Field operators ──────────────────────────────────────────────────────


def gamma_field(g: WeightedGraph, u: FunctionLike, v: FunctionLike) -> np.ndarray:
    """Gamma(u, v)(x) = 1/(2 mu(x)) sum_y w_xy (u(y)-u(x))(v(y)-v(x)), all x."""
    du = g.incidence @ as_array(g, u)
    dv = g.incidence @ as_array(g, v)
    return (g.abs_incidence_t @ (g.weight * du * dv)) / (2.0 * g.mu)


def grad_len_field(g: WeightedGraph, u: FunctionLike) -> np.ndarray:
    """|grad u|(x) = sqrt(Gamma(u, u)(x)), all x."""
    return np.sqrt(np.maximum(gamma_field(g, u, u), 0.0))


def gradient_power(glen: np.ndarray, p: float) -> np.ndarray:
    """|grad u|^(p-2) with the convention 0^0 = 1 (p = 2) and 0 for p > 2."""
    if p == 2:
        return np.ones_like(glen)
    return np.power(glen, p - 2.0)


def laplacian_field(g: WeightedGraph, u: FunctionLike) -> np.ndarray:
    """Delta u(x) = 1/mu(x) sum_y w_xy (u(y)-u(x)), all x."""
    du = g.incidence @ as_array(g, u)
    return -(g.incidence.T @ (g.weight * du)) / g.mu


def p_laplacian_field(g: WeightedGraph, u: FunctionLike, p: float) -> np.ndarray:
    """
    Delta_p u(x) = 1/(2 mu(x)) sum_y (|grad u|^(p-2)(y) + |grad u|^(p-2)(x)) w_xy (u(y)-u(x)).

    Raises:
        ParameterError: If p < 2.
    """
    _check_exponent(p)
    values = as_array(g, u)
    coeff = gradient_power(grad_len_field(g, values), p)
    du = g.incidence @ values
    edge_coeff = g.weight * (coeff[g.head] + coeff[g.tail])
    return -(g.incidence.T @ (edge_coeff * du)) / (2.0 * g.mu)


# ─── Per-vertex operators ─────────────────────────────────────────────────


def gamma(g: WeightedGraph, u: FunctionLike, v: FunctionLike, x: str) -> float:
    """Gradient form Gamma(u, v) at vertex x."""
    i = g.index(x)
    return float(gamma_field(g, u, v)[i])


def grad_len(g: WeightedGraph, u: FunctionLike, x: str) -> float:
    """Length of the gradient of u at vertex x."""
    i = g.index(x)
    return float(grad_len_field(g, u)[i])


def p_laplacian(g: WeightedGraph, u: FunctionLike, p: float, x: str) -> float:
    """p-Laplacian of u at vertex x."""
    i = g.index(x)
    return float(p_laplacian_field(g, u, p)[i])


# ─── Integration and norms ────────────────────────────────────────────────


def integrate(g: WeightedGraph, f: FunctionLike) -> float:
    """Integral of f with respect to mu: sum_x f(x) mu(x)."""
    return float(np.sum(as_array(g, f) * g.mu))


def lp_norm(g: WeightedGraph, u: FunctionLike, r: float) -> float:
    """
    L^r norm (integral |u|^r dmu)^(1/r), or max |u| for r = infinity.

    Raises:
        ParameterError: If r <= 1.
    """
    values = as_array(g, u)
    if math.isinf(r) and r > 0:
        return float(np.max(np.abs(values)))
    if not r > 1:
        raise ParameterError(f"L^r norm requires r > 1, got {r}")
    return float(np.sum(np.abs(values) ** r * g.mu) ** (1.0 / r))


def potential_floor(g: WeightedGraph, h: FunctionLike) -> float:
    """
    h0 = min h, checked positive.

    Raises:
        ParameterError: If h is not positive everywhere.
    """
    values = as_array(g, h)
    h0 = float(np.min(values))
    if not h0 > 0:
        bad = g.vertices[int(np.argmin(values))]
        raise ParameterError(f"potential must be positive, found {h0} at {bad}")
    return h0


def sobolev_norm(g: WeightedGraph, u: FunctionLike, s: float, h: FunctionLike) -> float:
    """
    W^{1,s}_h norm (integral |grad u|^s + h |u|^s dmu)^(1/s).

    Raises:
        ParameterError: If s <= 1 or h is not positive.
    """
    if not s > 1:
        raise ParameterError(f"Sobolev exponent must exceed 1, got {s}")
    potential_floor(g, h)
    values = as_array(g, u)
    density = grad_len_field(g, values) ** s + as_array(g, h) * np.abs(values) ** s
    return float(np.sum(density * g.mu) ** (1.0 / s))


def embedding_constant(kind: str, s: float, r: float, h0: float, mu0: float) -> float:
    """
    Constant C with ||u||_X <= C ||u||_{W^{1,s}_h}.

    Args:
        kind: "sup" for L^infinity, "lr" for L^r.
        s: Sobolev exponent, s > 1.
        r: Target exponent, r >= s (ignored for "sup"; r = inf selects "sup").
        h0: Lower bound of the potential.
        mu0: Lower bound of the measure.

    Raises:
        ParameterError: On an unknown kind or out-of-range argument.
    """
    if not s > 1:
        raise ParameterError(f"Sobolev exponent must exceed 1, got {s}")
    if not (h0 > 0 and mu0 > 0):
        raise ParameterError("h0 and mu0 must be positive")
    if kind == "lr" and math.isinf(r):
        kind = "sup"
    if kind == "sup":
        return (h0 * mu0) ** (-1.0 / s)
    if kind == "lr":
        if r < s:
            raise ParameterError(f"embedding into L^r requires r >= s, got r={r}, s={s}")
        return mu0 ** ((s - r) / (s * r)) * h0 ** (-1.0 / s)
    raise ParameterError(f"unknown embedding kind {kind!r}")


@dataclass(frozen=True)
class EmbeddingCheck:
    """Both sides of an embedding inequality."""
    lhs: float
    rhs: float
    holds: bool


def check_embedding(
    g: WeightedGraph,
    u: FunctionLike,
    s: float,
    r: float,
    h: FunctionLike,
) -> EmbeddingCheck:
    """Compare ||u||_{L^r} with C ||u||_{W^{1,s}_h} using the graph's own h0 and mu0."""
    h0 = potential_floor(g, h)
    kind = "sup" if math.isinf(r) else "lr"
    lhs = lp_norm(g, u, r)
    rhs = embedding_constant(kind, s, r, h0, g.mu0) * sobolev_norm(g, u, s, h)
    return EmbeddingCheck(lhs=lhs, rhs=rhs, holds=lhs <= rhs + 1e-12)


# ─── Invariant suite ──────────────────────────────────────────────────────


@dataclass(frozen=True)
class InvariantCheck:
    """Worst observed error of one identity or inequality over random functions."""
    name: str
    worst: float
    tolerance: float

    @property
    def holds(self) -> bool:
        return bool(self.worst <= self.tolerance)


def calculus_invariants(
    g: WeightedGraph,
    h: Optional[FunctionLike] = None,
    trials: int = 10,
    seed: int = 0,
) -> List[InvariantCheck]:
    """
    Exercise the operator identities on random functions over g.

    Covers bilinearity of Gamma, the Cauchy-Schwarz and reverse triangle
    inequalities for the gradient, the Green formula for Delta_p with
    p in {2, 2.5, 3, 4}, Delta_2 = Delta, and, when a potential h is given,
    the W^{1,s}_h embeddings for s in {2, 2.5, 3}.
    """
    rng = np.random.default_rng(seed)
    worst = {
        "gamma bilinearity": 0.0,
        "cauchy-schwarz": 0.0,
        "reverse triangle": 0.0,
        "green formula": 0.0,
        "laplacian agreement": 0.0,
    }
    embedding_worst = 0.0
    for _ in range(trials):
        u, v, w = (rng.standard_normal(g.n) for _ in range(3))
        a, b = rng.standard_normal(2)
        lhs = gamma_field(g, a * u + b * w, v)
        rhs = a * gamma_field(g, u, v) + b * gamma_field(g, w, v)
        scale = 1.0 + np.max(np.abs(rhs))
        worst["gamma bilinearity"] = max(worst["gamma bilinearity"], float(np.max(np.abs(lhs - rhs))) / scale)

        excess = gamma_field(g, u, v) - grad_len_field(g, u) * grad_len_field(g, v)
        worst["cauchy-schwarz"] = max(worst["cauchy-schwarz"], float(np.max(excess)))

        excess = np.abs(grad_len_field(g, w) - grad_len_field(g, u)) - grad_len_field(g, w - u)
        worst["reverse triangle"] = max(worst["reverse triangle"], float(np.max(excess)))

        for p in (2.0, 2.5, 3.0, 4.0):
            left = integrate(g, p_laplacian_field(g, u, p) * v)
            right = -integrate(g, gradient_power(grad_len_field(g, u), p) * gamma_field(g, u, v))
            error = abs(left - right) / (1.0 + abs(right))
            worst["green formula"] = max(worst["green formula"], error)

        diff = np.abs(p_laplacian_field(g, u, 2.0) - laplacian_field(g, u))
        worst["laplacian agreement"] = max(worst["laplacian agreement"], float(np.max(diff)))

        if h is not None:
            for s in (2.0, 2.5, 3.0):
                for r in (s, 2.0 * s, math.inf):
                    check = check_embedding(g, u, s, r, h)
                    embedding_worst = max(embedding_worst, check.lhs - check.rhs)

    tolerances = {
        "gamma bilinearity": 1e-12,
        "cauchy-schwarz": 1e-12,
        "reverse triangle": 1e-12,
        "green formula": 1e-10,
        "laplacian agreement": 1e-12,
    }
    checks = [InvariantCheck(name, worst[name], tolerances[name]) for name in worst]
    if h is not None:
        checks.append(InvariantCheck("embedding", embedding_worst, 1e-12))
    return checks
