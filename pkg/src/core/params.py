"""
Closed-form constants of the existence theory.

This module evaluates, for a loaded problem:
- Lambda0 and lambda0, the admissible range of the perturbation parameter
- rho and alpha, the radius and height of the mountain-pass barrier
- spike constants D1/D2 and the M threshold at a vertex
- ball constants D3/D4 and the start scale for the negative-energy search
- coercivity and Palais-Smale coefficients
- epsilon0 for single-equation problems

All functions are pure. Undefined constants raise ParameterError.
"""

from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional

import numpy as np

from src.core.calculus import VertexFunction, grad_len_field, integrate, lp_norm, sobolev_norm
from src.core.exceptions import ParameterError
from src.core.graph import WeightedGraph

if TYPE_CHECKING:
    from src.core.problem import HypothesisParams, ProblemSpec

# Relative margin between rho and Lambda0
RHO_MARGIN = 1e-3


def dual_exponent(r: float) -> float:
    """Hoelder conjugate r/(r-1)."""
    return r / (r - 1.0)


def barrier_coefficient(p: float, q: float) -> float:
    """min{1, q-1} / (2^(max{p,q}-1) (pq+p))."""
    m = max(p, q)
    return min(1.0, q - 1.0) / (2.0 ** (m - 1.0) * (p * q + p))


def perturbation_scale(spec: "ProblemSpec") -> float:
    """max{h0^(-1/p) ||e1||_{p'}, h0^(-1/q) ||e2||_{q'}}."""
    g = spec.graph
    return max(
        spec.h0 ** (-1.0 / spec.p) * lp_norm(g, spec.e1, dual_exponent(spec.p)),
        spec.h0 ** (-1.0 / spec.q) * lp_norm(g, spec.e2, dual_exponent(spec.q)),
    )


# ─── lambda0, rho, alpha ──────────────────────────────────────────────────


@dataclass(frozen=True)
class LambdaParams:
    Lambda0: float
    lambda0: float


def lambda0_params(spec: "ProblemSpec", l0: float) -> LambdaParams:
    """
    Lambda0 and the upper end lambda0 of the admissible perturbation range.

    Raises:
        ParameterError: If l0 <= 0 or both perturbation norms vanish.
    """
    if not l0 > 0:
        raise ParameterError(f"l0 must be positive, got {l0}")
    p, q, h0, mu0 = spec.p, spec.q, spec.h0, spec.mu0
    Lambda0 = min(0.5 * l0 * min((h0 * mu0) ** (1.0 / p), (h0 * mu0) ** (1.0 / q)), 1.0)
    scale = perturbation_scale(spec)
    if scale == 0:
        raise ParameterError("perturbation norms are zero; lambda0 is undefined")
    lambda0 = barrier_coefficient(p, q) / scale * Lambda0 ** (max(p, q) - 1.0)
    return LambdaParams(Lambda0=Lambda0, lambda0=lambda0)


def alpha_value(spec: "ProblemSpec", rho: float, lam: float) -> float:
    """Barrier height c rho^max(p,q) - lambda E rho on the sphere of radius rho."""
    m = max(spec.p, spec.q)
    return barrier_coefficient(spec.p, spec.q) * rho ** m - lam * perturbation_scale(spec) * rho


@dataclass(frozen=True)
class RhoAlpha:
    rho: float
    alpha: float


def rho_alpha(spec: "ProblemSpec", l0: float, lam: float) -> RhoAlpha:
    """
    Radius rho = (1 - 1e-3) Lambda0 and the barrier height alpha > 0 on it.

    Raises:
        ParameterError: If lam is outside (0, lambda0) or alpha is not positive.
    """
    params = lambda0_params(spec, l0)
    if not 0 < lam < params.lambda0:
        raise ParameterError(
            f"lambda must lie in (0, lambda0) = (0, {params.lambda0:.6g}), got {lam}"
        )
    rho = (1.0 - RHO_MARGIN) * params.Lambda0
    alpha = alpha_value(spec, rho, lam)
    if not alpha > 0:
        raise ParameterError(
            f"alpha = {alpha:.6g} is not positive; lambda is too close to lambda0"
        )
    return RhoAlpha(rho=rho, alpha=alpha)


# ─── Spike constants ──────────────────────────────────────────────────────


def spike_closed_form(g: WeightedGraph, x: str, s: float) -> float:
    """(deg(x)/2)^(s/2) (sum_{y~x} mu(y)^(1-s/2) + mu(x)^(1-s/2))."""
    i = g.index(x)
    neighbours = [g.index(y) for y, _ in g.adjacency[i]]
    deg = float(g.degrees[i])
    total = float(np.sum(g.mu[neighbours] ** (1.0 - s / 2.0))) + g.mu[i] ** (1.0 - s / 2.0)
    return (deg / 2.0) ** (s / 2.0) * total


def spike_integral(g: WeightedGraph, x: str, s: float) -> float:
    """Integral of |grad 1_x|^s dmu."""
    return integrate(g, grad_len_field(g, VertexFunction.indicator(g, x)) ** s)


@dataclass(frozen=True)
class SpikeConstants:
    """
    Constants of the spike 1_x at a vertex.

    D1/D2 are the closed forms; D1_integral/D2_integral are the
    exact Dirichlet energies. The closed form is an upper bound, with
    equality when x has a single neighbour.
    """
    vertex: str
    D1: float
    D2: float
    D1_integral: float
    D2_integral: float
    M_threshold: float


def _require_perturbed(spec: "ProblemSpec", x: str) -> int:
    i = spec.graph.index(x)
    if not spec.e1.values[i] + spec.e2.values[i] > 0:
        raise ParameterError(f"e1 + e2 must be positive at {x}")
    return i


def spike_constants(spec: "ProblemSpec", x3: str) -> SpikeConstants:
    """
    D1, D2 and the lower bound M must exceed for the spike endpoint at x3.

    Raises:
        ParameterError: If e1(x3) + e2(x3) <= 0.
    """
    i = _require_perturbed(spec, x3)
    g = spec.graph
    D1 = spike_closed_form(g, x3, spec.p)
    D2 = spike_closed_form(g, x3, spec.q)
    mu = g.mu[i]
    threshold = max(
        (D1 + mu * spec.h1.values[i]) / (spec.p * mu),
        (D2 + mu * spec.h2.values[i]) / (spec.q * mu),
    )
    return SpikeConstants(
        vertex=x3,
        D1=D1,
        D2=D2,
        D1_integral=spike_integral(g, x3, spec.p),
        D2_integral=spike_integral(g, x3, spec.q),
        M_threshold=float(threshold),
    )


def spike_energy_bound(
    spec: "ProblemSpec", constants: SpikeConstants, s: float, M: float, lam: Optional[float] = None
) -> float:
    """
    Upper bound for the energy of s(1_x, 1_x) when F(x, s, s) >= M(s^p + s^q).

    lam defaults to lambda1 (the super-linear theory uses lambda1 = lambda2).
    """
    i = spec.graph.index(constants.vertex)
    mu = spec.graph.mu[i]
    lam = spec.lambda1 if lam is None else lam
    p, q = spec.p, spec.q
    return float(
        s ** p / p * (constants.D1 + mu * spec.h1.values[i])
        + s ** q / q * (constants.D2 + mu * spec.h2.values[i])
        - M * mu * (s ** p + s ** q)
        - lam * s * mu * (spec.e1.values[i] + spec.e2.values[i])
    )


@dataclass(frozen=True)
class BallConstants:
    vertex: str
    D3: float
    D4: float
    start_scale_bound: float


def ball_constants(spec: "ProblemSpec", x4: str, rho: float) -> BallConstants:
    """
    D3, D4 at x4 and the bound min{rho/(2||1_x4||_p), rho/(2||1_x4||_q)} on the start scale.

    Raises:
        ParameterError: If e1(x4) + e2(x4) <= 0 or rho <= 0.
    """
    _require_perturbed(spec, x4)
    if not rho > 0:
        raise ParameterError(f"rho must be positive, got {rho}")
    g = spec.graph
    spike = VertexFunction.indicator(g, x4)
    bound = min(
        rho / (2.0 * sobolev_norm(g, spike, spec.p, spec.h1)),
        rho / (2.0 * sobolev_norm(g, spike, spec.q, spec.h2)),
    )
    return BallConstants(
        vertex=x4,
        D3=spike_closed_form(g, x4, spec.p),
        D4=spike_closed_form(g, x4, spec.q),
        start_scale_bound=bound,
    )


# ─── Coercivity and Palais-Smale ──────────────────────────────────────────


@dataclass(frozen=True)
class CoercivityConstants:
    """Coefficients of energy >= a_u ||u||^p + a_v ||v||^q - b_u ||u|| - b_v ||v||."""
    a_u: float
    a_v: float
    b_u: float
    b_v: float

    @property
    def coercive(self) -> bool:
        return self.a_u > 0 and self.a_v > 0


def coercivity_constants(spec: "ProblemSpec", hp: "HypothesisParams") -> CoercivityConstants:
    """
    Lower-bound coefficients implied by the sub-linear growth data f1, f2, g1, g2.

    Raises:
        ParameterError: If f1, f2, g1 or g2 is missing.
    """
    if hp.f1 is None or hp.f2 is None or hp.g1 is None or hp.g2 is None:
        raise ParameterError("coercivity constants need f1, f2, g1 and g2")
    g = spec.graph
    p, q, h0 = spec.p, spec.q, spec.h0
    f1 = float(np.max(np.abs(hp.f1)))
    f2 = float(np.max(np.abs(hp.f2)))
    return CoercivityConstants(
        a_u=1.0 / p - 2.0 * f1 / (p * h0),
        a_v=1.0 / q - (p - 1.0) * f1 / (p * h0) - f2 / (q * h0),
        b_u=h0 ** (-1.0 / p)
        * (spec.lambda1 * lp_norm(g, spec.e1, dual_exponent(p)) + lp_norm(g, hp.g1, dual_exponent(p))),
        b_v=h0 ** (-1.0 / q)
        * (spec.lambda2 * lp_norm(g, spec.e2, dual_exponent(q)) + lp_norm(g, hp.g2, dual_exponent(q))),
    )


@dataclass(frozen=True)
class PalaisSmaleConstants:
    c_u: float
    c_v: float

    @property
    def positive(self) -> bool:
        return self.c_u > 0 and self.c_v > 0


def palais_smale_constants(spec: "ProblemSpec", hp: "HypothesisParams") -> PalaisSmaleConstants:
    """
    1/p - 1/nu - A/(nu h0) and 1/q - 1/nu - A/(nu h0).

    Raises:
        ParameterError: If nu or A is missing.
    """
    if hp.nu is None or hp.A is None:
        raise ParameterError("Palais-Smale constants need nu and A")
    tail = 1.0 / hp.nu + hp.A / (hp.nu * spec.h0)
    return PalaisSmaleConstants(c_u=1.0 / spec.p - tail, c_v=1.0 / spec.q - tail)


# ─── Single equation ──────────────────────────────────────────────────────


def epsilon0_param(spec: "ProblemSpec", l0: float) -> float:
    """
    Upper end epsilon0 of the admissible range for the single equation.

    Raises:
        ParameterError: If the spec is not a single equation, l0 <= 0, or e vanishes.
    """
    if not spec.single_equation:
        raise ParameterError("epsilon0 is defined for single-equation problems only")
    if not l0 > 0:
        raise ParameterError(f"l0 must be positive, got {l0}")
    p, h0 = spec.p, spec.h0
    e_norm = lp_norm(spec.graph, spec.e1, dual_exponent(p))
    if e_norm == 0:
        raise ParameterError("perturbation norm is zero; epsilon0 is undefined")
    numerator = min(l0 * (h0 * spec.mu0) ** (1.0 / p), 1.0) ** (p - 1.0)
    return numerator / ((p + 1.0) * h0 ** (-1.0 / p) * e_norm)


# ─── Semi-trivial bounds ──────────────────────────────────────────────────


@dataclass(frozen=True)
class SemiTrivialBounds:
    """Sup-norm bounds for solutions of the form (u, 0) and (0, v)."""
    variant: str
    u_bound: float
    v_bound: float


def semitrivial_bounds(spec: "ProblemSpec", hp: "HypothesisParams", variant: str = "F1") -> SemiTrivialBounds:
    """
    Bounds on ||u||_inf for (u, 0) and ||v||_inf for (0, v).

    variant "F1" divides by h0 - ||f1|| (u) and h0 - ||f2|| (v); "F1'"
    swaps f1 and f2.

    Raises:
        ParameterError: If data is missing or a denominator is not positive.
    """
    if hp.f1 is None or hp.f2 is None or hp.g1 is None or hp.g2 is None:
        raise ParameterError("semi-trivial bounds need f1, f2, g1 and g2")
    g = spec.graph
    p, q, h0, mu0 = spec.p, spec.q, spec.h0, spec.mu0
    f1 = float(np.max(np.abs(hp.f1)))
    f2 = float(np.max(np.abs(hp.f2)))
    if variant == "F1":
        den_u, den_v = h0 - f1, h0 - f2
    elif variant == "F1'":
        den_u, den_v = h0 - f2, h0 - f1
    else:
        raise ParameterError(f"unknown bound variant {variant!r}")
    if not (den_u > 0 and den_v > 0):
        raise ParameterError("h0 must exceed the sup norms of f1 and f2")
    num_u = spec.lambda1 * lp_norm(g, spec.e1, dual_exponent(p)) + lp_norm(g, hp.g1, dual_exponent(p))
    num_v = spec.lambda2 * lp_norm(g, spec.e2, dual_exponent(q)) + lp_norm(g, hp.g2, dual_exponent(q))
    return SemiTrivialBounds(
        variant=variant,
        u_bound=mu0 ** (-1.0 / p) * (num_u / den_u) ** (1.0 / (p - 1.0)),
        v_bound=mu0 ** (-1.0 / q) * (num_v / den_v) ** (1.0 / (q - 1.0)),
    )
