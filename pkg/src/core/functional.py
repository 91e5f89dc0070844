"""
Energy functional of the coupled system.

For a problem spec and a state (u, v) this module evaluates:
- the energy phi_lambda(u, v)
- its directional derivative along (phi1, phi2)
- the vertex-wise gradient (the mu-weighted representative of the derivative)
- the pointwise residual of the system
- a central finite-difference check of the derivative
- the W-norm and the coercivity lower bound

The Functional class caches the spec's arrays and works on flat vectors
[u; v]; the module-level functions wrap it for State values.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from src.core.calculus import (
    VertexFunction,
    gamma_field,
    grad_len_field,
    gradient_power,
    p_laplacian_field,
)
from src.core.exceptions import ParameterError
from src.core.graph import WeightedGraph
from src.core.params import coercivity_constants
from src.core.problem import HypothesisParams, ProblemSpec
from src.services.logging_service import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class State:
    """A pair (u, v) of vertex functions on the same graph."""
    u: VertexFunction
    v: VertexFunction

    def __post_init__(self) -> None:
        if self.u.graph is not self.v.graph:
            raise ValueError("state channels live on different graphs")

    @property
    def graph(self) -> WeightedGraph:
        return self.u.graph

    @classmethod
    def zeros(cls, graph: WeightedGraph) -> "State":
        return cls(VertexFunction.zeros(graph), VertexFunction.zeros(graph))

    @classmethod
    def from_vector(cls, graph: WeightedGraph, x: np.ndarray) -> "State":
        """Split a flat vector [u; v] of length 2n."""
        n = graph.n
        return cls(VertexFunction(graph, x[:n]), VertexFunction(graph, x[n:]))

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.u.values, self.v.values])

    def scaled(self, t: float) -> "State":
        return State(self.u * t, self.v * t)


def signed_power(values: np.ndarray, exponent: float) -> np.ndarray:
    """|x|^(exponent-1) x, continuous with value 0 at x = 0."""
    return np.sign(values) * np.abs(values) ** (exponent - 1.0)


class Functional:
    """
    Energy, gradient and residual of a ProblemSpec on flat vectors [u; v].

    Vectors have length 2n in the graph's vertex order. Overflow produces
    infinite energy rather than an exception so that line searches can
    reject the step; non-finite F raises NonFiniteValueError.
    """

    def __init__(self, spec: ProblemSpec) -> None:
        self.spec = spec
        self.graph = spec.graph
        self.n = spec.graph.n
        self._mu = spec.graph.mu
        self._h1 = spec.h1.values
        self._h2 = spec.h2.values
        self._load_u = spec.lambda1 * spec.e1.values
        self._load_v = spec.lambda2 * spec.e2.values

    def split(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return x[: self.n], x[self.n:]

    def energy(self, x: np.ndarray) -> float:
        spec, g = self.spec, self.graph
        u, v = self.split(x)
        F, _, _ = spec.nonlinearity.at_state(u, v)
        with np.errstate(over="ignore", invalid="ignore"):
            density = (
                (grad_len_field(g, u) ** spec.p + self._h1 * np.abs(u) ** spec.p) / spec.p
                + (grad_len_field(g, v) ** spec.q + self._h2 * np.abs(v) ** spec.q) / spec.q
                - F
                - self._load_u * u
                - self._load_v * v
            )
            value = float(np.sum(density * self._mu))
        return value if np.isfinite(value) else float("inf")

    def residual(self, x: np.ndarray) -> np.ndarray:
        """Stacked pointwise residual [r_u; r_v]."""
        spec, g = self.spec, self.graph
        u, v = self.split(x)
        _, Fs, Ft = spec.nonlinearity.at_state(u, v)
        r_u = -p_laplacian_field(g, u, spec.p) + self._h1 * signed_power(u, spec.p) - Fs - self._load_u
        r_v = -p_laplacian_field(g, v, spec.q) + self._h2 * signed_power(v, spec.q) - Ft - self._load_v
        return np.concatenate([r_u, r_v])

    def gradient(self, x: np.ndarray) -> np.ndarray:
        """mu-weighted gradient [mu r_u; mu r_v]."""
        return np.tile(self._mu, 2) * self.residual(x)

    def d_energy(self, x: np.ndarray, d: np.ndarray) -> float:
        """Directional derivative evaluated from the weak form."""
        spec, g = self.spec, self.graph
        u, v = self.split(x)
        phi1, phi2 = self.split(d)
        _, Fs, Ft = spec.nonlinearity.at_state(u, v)
        density = (
            gradient_power(grad_len_field(g, u), spec.p) * gamma_field(g, u, phi1)
            + self._h1 * signed_power(u, spec.p) * phi1
            - Fs * phi1
            - self._load_u * phi1
            + gradient_power(grad_len_field(g, v), spec.q) * gamma_field(g, v, phi2)
            + self._h2 * signed_power(v, spec.q) * phi2
            - Ft * phi2
            - self._load_v * phi2
        )
        return float(np.sum(density * self._mu))

    def channel_norms(self, x: np.ndarray) -> Tuple[float, float]:
        """(||u||_{W^{1,p}_{h1}}, ||v||_{W^{1,q}_{h2}})."""
        spec, g = self.spec, self.graph
        u, v = self.split(x)
        with np.errstate(over="ignore"):
            a = np.sum((grad_len_field(g, u) ** spec.p + self._h1 * np.abs(u) ** spec.p) * self._mu)
            b = np.sum((grad_len_field(g, v) ** spec.q + self._h2 * np.abs(v) ** spec.q) * self._mu)
        return float(a ** (1.0 / spec.p)), float(b ** (1.0 / spec.q))

    def w_norm(self, x: np.ndarray) -> float:
        a, b = self.channel_norms(x)
        return a + b


# ─── State-level operations ───────────────────────────────────────────────


def energy(spec: ProblemSpec, state: State) -> float:
    """Energy of the state."""
    return Functional(spec).energy(state.to_vector())


def d_energy(spec: ProblemSpec, state: State, direction: State) -> float:
    """Directional derivative of the energy at state along direction."""
    return Functional(spec).d_energy(state.to_vector(), direction.to_vector())


def gradient(spec: ProblemSpec, state: State) -> State:
    """Vertex-wise gradient (g_u, g_v) with sum_x g . d = d_energy(d)."""
    return State.from_vector(spec.graph, Functional(spec).gradient(state.to_vector()))


@dataclass(frozen=True)
class Residual:
    r_u: VertexFunction
    r_v: VertexFunction
    sup: float


def residual(spec: ProblemSpec, state: State) -> Residual:
    """Pointwise residual of both equations and its sup norm."""
    r = Functional(spec).residual(state.to_vector())
    pair = State.from_vector(spec.graph, r)
    return Residual(r_u=pair.u, r_v=pair.v, sup=float(np.max(np.abs(r))))


def w_norm(spec: ProblemSpec, state: State) -> float:
    """||u||_{W^{1,p}_{h1}} + ||v||_{W^{1,q}_{h2}}."""
    return Functional(spec).w_norm(state.to_vector())


@dataclass(frozen=True)
class FdCheck:
    max_rel_err: float
    step: float
    n_directions: int


def fd_check(
    spec: ProblemSpec,
    state: State,
    n_directions: int = 50,
    step: float = 1e-6,
    seed: int = 0,
) -> FdCheck:
    """
    Compare d_energy with central differences of the energy along random unit directions.

    The step grows to 1e-4 when |energy| exceeds 1e6.
    """
    if not step > 0:
        raise ParameterError(f"finite-difference step must be positive, got {step}")
    functional = Functional(spec)
    x = state.to_vector()
    if abs(functional.energy(x)) > 1e6:
        step = max(step, 1e-4)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_directions):
        d = rng.standard_normal(x.size)
        d /= np.linalg.norm(d)
        exact = functional.d_energy(x, d)
        approx = (functional.energy(x + step * d) - functional.energy(x - step * d)) / (2.0 * step)
        worst = max(worst, abs(exact - approx) / (1.0 + abs(exact)))
    logger.debug(f"Finite-difference check: {n_directions} directions, max relative error {worst:.3e}")
    return FdCheck(max_rel_err=worst, step=step, n_directions=n_directions)


@dataclass(frozen=True)
class LowerBoundCheck:
    energy: float
    bound: float
    holds: bool


def coercivity_lower_bound(
    spec: ProblemSpec, state: State, hp: Optional[HypothesisParams] = None
) -> LowerBoundCheck:
    """
    Evaluate a_u||u||^p + a_v||v||^q - b_u||u|| - b_v||v|| and compare it with the energy.

    Raises:
        ParameterError: If the growth data f1, f2, g1, g2 are missing.
    """
    hp = spec.hypothesis if hp is None else hp
    constants = coercivity_constants(spec, hp)
    functional = Functional(spec)
    x = state.to_vector()
    nu, nv = functional.channel_norms(x)
    bound = (
        constants.a_u * nu ** spec.p
        + constants.a_v * nv ** spec.q
        - constants.b_u * nu
        - constants.b_v * nv
    )
    value = functional.energy(x)
    return LowerBoundCheck(energy=value, bound=float(bound), holds=value >= bound - 1e-10 * (1.0 + abs(bound)))
