"""
Problem specifications for the coupled (p,q)-Laplacian system.

This module holds:
- ProblemSpec: exponents, potentials, perturbations, parameters and F
- HypothesisParams: optional constants that the hypothesis audit checks
- Built-in presets (the two worked examples and the single-equation reduction)
- load_problem: building a ProblemSpec from a JSON configuration

A ProblemSpec validates its standing assumptions on construction and is
immutable afterwards; use with_lambda() for a copy with new parameters.
"""

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

import numpy as np

from src.core.calculus import VertexFunction
from src.core.exceptions import GraphFormatError, ProblemConfigError, UnknownVertexError
from src.core.graph import WeightedGraph, distance_array, require_valid
from src.core.nonlinearity import (
    Example51Nonlinearity,
    Example52Nonlinearity,
    ExpressionNonlinearity,
    Nonlinearity,
    ScalarNonlinearity,
    ZeroNonlinearity,
    log_cubic,
)
from src.core.expression import Expression
from src.core.params import lambda0_params, spike_closed_form
from src.services.logging_service import get_logger

logger = get_logger(__name__)


# ─── Types ────────────────────────────────────────────────────────────────


@dataclass(frozen=True, eq=False)
class HypothesisParams:
    """
    Constants supplied with a problem for the hypothesis audit.

    Vertex-dependent entries (f1, f2, g1, g2, K1, K2, K3, b) are dense arrays
    in the graph's vertex order. Absent entries make the corresponding
    condition not applicable.
    """
    f1: Optional[np.ndarray] = None
    f2: Optional[np.ndarray] = None
    g1: Optional[np.ndarray] = None
    g2: Optional[np.ndarray] = None
    beta1: Optional[float] = None
    beta2: Optional[float] = None
    K1: Optional[np.ndarray] = None
    K2: Optional[np.ndarray] = None
    x1: Optional[str] = None
    x2: Optional[str] = None
    l0: Optional[float] = None
    l1: Optional[float] = None
    l2: Optional[float] = None
    M: Optional[float] = None
    x3: Optional[str] = None
    x4: Optional[str] = None
    nu: Optional[float] = None
    A: Optional[float] = None
    beta3: Optional[float] = None
    K3: Optional[np.ndarray] = None
    b: Optional[np.ndarray] = None
    # (radius, value) pairs of a nondecreasing step majorant a(|(s,t)|)
    a_table: Optional[Tuple[Tuple[float, float], ...]] = None
    # Levels B at which sublevel-set measures are reported
    sublevels: Optional[Tuple[float, ...]] = None


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """
    The coupled system with exponents p, q >= 2 on a finite weighted graph.

    h0 may be declared explicitly (any positive lower bound of h1 and h2);
    otherwise it is min over h1 and h2. strict=False admits identically zero
    perturbations and an F that is nonzero at (x, 0, 0), so degenerate
    problems can still be solved or audited.
    """
    graph: WeightedGraph
    p: float
    q: float
    h1: VertexFunction
    h2: VertexFunction
    e1: VertexFunction
    e2: VertexFunction
    lambda1: float
    lambda2: float
    nonlinearity: Nonlinearity
    h0: Optional[float] = None
    hypothesis: HypothesisParams = field(default_factory=HypothesisParams)
    name: str = "custom"
    single_equation: bool = False
    strict: bool = True
    anchors: Mapping[str, str] = field(default_factory=dict)
    mu0: float = field(init=False)

    def __post_init__(self) -> None:
        require_valid(self.graph)

        if not (self.p >= 2 and self.q >= 2):
            raise ProblemConfigError(f"exponents must satisfy p >= 2 and q >= 2, got p={self.p}, q={self.q}")

        for label in ("h1", "h2", "e1", "e2"):
            function = getattr(self, label)
            if function.graph is not self.graph:
                raise ProblemConfigError(f"{label} is defined on a different graph")
        if self.nonlinearity.graph is not self.graph:
            raise ProblemConfigError("nonlinearity is bound to a different graph")

        floor = float(min(np.min(self.h1.values), np.min(self.h2.values)))
        if not floor > 0:
            raise ProblemConfigError(f"(H₁) violated: potentials must be positive, min h = {floor}")
        if self.h0 is None:
            object.__setattr__(self, "h0", floor)
        elif not 0 < self.h0 <= floor:
            raise ProblemConfigError(
                f"(H₁) violated: declared h0 = {self.h0} is not in (0, min h = {floor}]"
            )
        else:
            object.__setattr__(self, "h0", float(self.h0))

        if self.strict and not (np.any(self.e1.values != 0) or np.any(self.e2.values != 0)):
            raise ProblemConfigError("perturbations identically zero")

        if not (self.lambda1 > 0 and self.lambda2 > 0):
            raise ProblemConfigError(
                f"lambda1 and lambda2 must be positive, got {self.lambda1}, {self.lambda2}"
            )

        bad = self.nonlinearity.origin_violations()
        if bad and self.strict:
            raise ProblemConfigError(f"F(x,0,0) = 0 violated at {bad[:5]}")

        hp = self.hypothesis
        if hp.nu is not None:
            if not hp.nu > max(self.p, self.q):
                raise ProblemConfigError(f"(C₃) requires nu > max(p, q), got nu={hp.nu}")
            if hp.A is not None:
                cap = min(hp.nu / self.p - 1.0, hp.nu / self.q - 1.0) * self.h0
                if not 0 <= hp.A < cap:
                    raise ProblemConfigError(f"(C₃) requires 0 <= A < {cap:.6g}, got A={hp.A}")

        object.__setattr__(self, "mu0", self.graph.mu0)

    def with_lambda(self, lambda1: float, lambda2: Optional[float] = None) -> "ProblemSpec":
        """Copy with new parameters (lambda2 defaults to lambda1)."""
        return dataclasses.replace(
            self, lambda1=float(lambda1), lambda2=float(lambda1 if lambda2 is None else lambda2)
        )

    def with_nonlinearity(self, nonlinearity: Nonlinearity) -> "ProblemSpec":
        return dataclasses.replace(self, nonlinearity=nonlinearity)


# ─── Presets ──────────────────────────────────────────────────────────────


def _require_distinct(graph: WeightedGraph, x1: str, x2: str) -> None:
    graph.index(x1)
    graph.index(x2)
    if x1 == x2:
        raise ProblemConfigError(f"anchor vertices must differ, both are {x1!r}")


def preset_example51(
    graph: WeightedGraph, x1: str, x2: str, lambda1: float = 1.0, lambda2: float = 1.0
) -> ProblemSpec:
    """
    Sub-linear example: p=2, q=3, h_i = 3 + dist(x, x_i), F = (3/5)(s^(5/3) + t^(5/3)) on {x1, x2}.

    The hypothesis data are f1 = f2 = 1, g1 = g2 = e1 = e2 = 1_{x1,x2},
    beta1 = beta2 = 5/3 and K1 = K2 = 3/5.
    """
    _require_distinct(graph, x1, x2)
    n = graph.n
    pair = VertexFunction.indicator(graph, x1, x2)
    ones = np.ones(n)
    hypothesis = HypothesisParams(
        f1=ones,
        f2=ones,
        g1=pair.values,
        g2=pair.values,
        beta1=5.0 / 3.0,
        beta2=5.0 / 3.0,
        K1=np.full(n, 0.6),
        K2=np.full(n, 0.6),
        x1=x1,
        x2=x2,
    )
    return ProblemSpec(
        graph=graph,
        p=2.0,
        q=3.0,
        h1=VertexFunction(graph, 3.0 + distance_array(graph, x1)),
        h2=VertexFunction(graph, 3.0 + distance_array(graph, x2)),
        e1=pair,
        e2=pair,
        lambda1=float(lambda1),
        lambda2=float(lambda2),
        nonlinearity=Example51Nonlinearity(graph, x1, x2),
        hypothesis=hypothesis,
        name="example51",
        anchors={"x1": x1, "x2": x2},
    )


def example52_potential(graph: WeightedGraph, x1: str, x2: str, c1: float = 1.0) -> VertexFunction:
    """h(x) = c1 dist(x, x1) - 1/(dist(x, x2) + 1) + 2."""
    if not c1 > 0:
        raise ProblemConfigError(f"c1 must be positive, got {c1}")
    return VertexFunction(
        graph,
        c1 * distance_array(graph, x1) - 1.0 / (distance_array(graph, x2) + 1.0) + 2.0,
    )


def example52_M(graph: WeightedGraph, x1: str, h: VertexFunction, p: float = 2.0, q: float = 3.0) -> float:
    """Spike threshold at x1 plus one."""
    i = graph.index(x1)
    mu = graph.mu[i]
    threshold = max(
        (spike_closed_form(graph, x1, p) + mu * h.values[i]) / (p * mu),
        (spike_closed_form(graph, x1, q) + mu * h.values[i]) / (q * mu),
    )
    return float(threshold) + 1.0


def preset_example52(
    graph: WeightedGraph,
    x1: str,
    x2: str,
    lam: Optional[float] = None,
    c1: float = 1.0,
    e1: Optional[VertexFunction] = None,
    e2: Optional[VertexFunction] = None,
    lambda_fraction: float = 0.5,
) -> ProblemSpec:
    """
    Super-linear example: p=2, q=3, h1 = h2 = c1 dist(x,x1) - 1/(dist(x,x2)+1) + 2, h0 = 1,
    F = M ln(1 + s^4 + t^4)(s^4 + t^4).

    e1 = e2 = 1_{x1} unless given. When lam is None, lambda1 = lambda2 =
    lambda_fraction * lambda0 with l0 = 1/(64 M).
    """
    _require_distinct(graph, x1, x2)
    h = example52_potential(graph, x1, x2, c1)
    spike = VertexFunction.indicator(graph, x1)
    e1 = spike if e1 is None else e1
    e2 = spike if e2 is None else e2
    M = example52_M(graph, x1, h)
    l0 = 1.0 / (64.0 * M)
    hypothesis = HypothesisParams(
        l0=l0,
        l1=1.0,
        l2=1.0,
        M=M,
        x3=x1,
        x4=x1,
        nu=4.0,
        A=0.25,
        beta3=2.0,
        K3=np.ones(graph.n),
    )
    spec = ProblemSpec(
        graph=graph,
        p=2.0,
        q=3.0,
        h1=h,
        h2=h,
        e1=e1,
        e2=e2,
        lambda1=1.0,
        lambda2=1.0,
        nonlinearity=Example52Nonlinearity(graph, M),
        h0=1.0,
        hypothesis=hypothesis,
        name="example52",
        anchors={"x1": x1, "x2": x2},
    )
    if lam is None:
        lam = lambda_fraction * lambda0_params(spec, l0).lambda0
    logger.debug(f"Super-linear preset: M={M:.6g}, l0={l0:.6g}, lambda={lam:.6g}")
    return spec.with_lambda(lam)


def preset_single_equation(
    graph: WeightedGraph,
    p: float,
    h: VertexFunction,
    e: VertexFunction,
    epsilon: float,
    F1d: ScalarNonlinearity,
    h0: Optional[float] = None,
    hypothesis: Optional[HypothesisParams] = None,
) -> ProblemSpec:
    """
    Single equation -Delta_p u + h|u|^(p-2)u = F_u(x,u) + epsilon e as a system.

    The v-channel has q = p, h2 = h, e2 = 0 and F independent of t, so
    v = 0 solves it identically.
    """
    if not isinstance(F1d, ScalarNonlinearity):
        raise ProblemConfigError("single-equation nonlinearity must not depend on t")
    return ProblemSpec(
        graph=graph,
        p=float(p),
        q=float(p),
        h1=h,
        h2=h,
        e1=e,
        e2=VertexFunction.zeros(graph),
        lambda1=float(epsilon),
        lambda2=1.0,
        nonlinearity=F1d,
        h0=h0,
        hypothesis=hypothesis or HypothesisParams(),
        name="single-equation",
        single_equation=True,
    )


# ─── Configuration loading ────────────────────────────────────────────────

ConfigSource = Union[str, Path, Mapping[str, Any]]


def _resolve_vertex(anchors: Mapping[str, str], name: str) -> str:
    return anchors.get(name, name)


def vertex_function_from_config(
    graph: WeightedGraph, spec: Any, anchors: Mapping[str, str], label: str
) -> VertexFunction:
    """
    Build a vertex function from its configuration form.

    Accepted forms: a number; {"constant": c}; {"values": {id: v} | [v, ...]};
    {"indicator": [ids]}; {"dist": {"anchor": a, "offset": o, "slope": k}}
    meaning o + k dist(x, a); {"preset": "3+dist", "anchor": a}.
    """
    try:
        if isinstance(spec, (int, float)):
            return VertexFunction.constant(graph, float(spec))
        if not isinstance(spec, Mapping):
            raise ProblemConfigError(f"{label}: unsupported vertex function {spec!r}")
        if "constant" in spec:
            return VertexFunction.constant(graph, float(spec["constant"]))
        if "values" in spec:
            values = spec["values"]
            if isinstance(values, Mapping):
                return VertexFunction.from_mapping(graph, values)
            return VertexFunction(graph, values)
        if "indicator" in spec:
            ids = spec["indicator"]
            ids = [ids] if isinstance(ids, str) else ids
            return VertexFunction.indicator(graph, *[_resolve_vertex(anchors, x) for x in ids])
        if "dist" in spec:
            d = spec["dist"]
            anchor = _resolve_vertex(anchors, d["anchor"])
            return VertexFunction(
                graph, float(d.get("offset", 0.0)) + float(d.get("slope", 1.0)) * distance_array(graph, anchor)
            )
        if spec.get("preset") == "3+dist":
            anchor = _resolve_vertex(anchors, spec["anchor"])
            return VertexFunction(graph, 3.0 + distance_array(graph, anchor))
    except UnknownVertexError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise ProblemConfigError(f"{label}: {e}") from e
    raise ProblemConfigError(f"{label}: unsupported vertex function {dict(spec)!r}")


def nonlinearity_from_config(
    graph: WeightedGraph,
    spec: Mapping[str, Any],
    anchors: Mapping[str, str],
    h: Optional[VertexFunction] = None,
    single: bool = False,
) -> Nonlinearity:
    """
    Build F from {"preset": name, ...} or {"expr": {"F":..., "Fs":..., "Ft":...}, "support": [...]}.

    Presets: "zero", "example51", "example52" (M computed from anchor x1
    unless given) and, for single equations, "log-cubic" with M.
    """
    support = spec.get("support")
    if support is not None:
        support = [_resolve_vertex(anchors, x) for x in support]
    if "expr" in spec:
        expr = spec["expr"]
        if single:
            F, Fs = Expression(expr["F"]), Expression(expr["Fs"])
            if "t" in F.variables | Fs.variables:
                raise ProblemConfigError("single-equation expressions must not use t")

            def scalar(idx, s):
                return F(s, 0.0), Fs(s, 0.0)

            return ScalarNonlinearity(graph, scalar, f"expr:{expr['F']}", support=support)
        return ExpressionNonlinearity(graph, expr["F"], expr["Fs"], expr["Ft"], support=support)

    preset = spec.get("preset")
    if preset == "zero":
        return ZeroNonlinearity(graph)
    if preset == "example51":
        return Example51Nonlinearity(graph, anchors["x1"], anchors["x2"])
    if preset == "example52":
        M = spec.get("M")
        if M is None:
            if h is None:
                raise ProblemConfigError("example52 nonlinearity needs M or a potential")
            M = example52_M(graph, anchors["x1"], h)
        return Example52Nonlinearity(graph, float(M), support=support)
    if preset == "log-cubic":
        return ScalarNonlinearity(graph, log_cubic(float(spec["M"])), "log-cubic", support=support)
    raise ProblemConfigError(f"unknown nonlinearity {dict(spec)!r}")


_VERTEX_HYPOTHESIS_FIELDS = ("f1", "f2", "g1", "g2", "K1", "K2", "K3", "b")
_VERTEX_ID_FIELDS = ("x1", "x2", "x3", "x4")


def hypothesis_from_config(
    graph: WeightedGraph, data: Mapping[str, Any], anchors: Mapping[str, str]
) -> HypothesisParams:
    """Parse the optional "hypothesis" block; unknown keys are an error."""
    known = {f.name for f in dataclasses.fields(HypothesisParams)}
    unknown = set(data) - known
    if unknown:
        raise ProblemConfigError(f"unknown hypothesis keys {sorted(unknown)}")
    values: Dict[str, Any] = {}
    for key, value in data.items():
        if key in _VERTEX_HYPOTHESIS_FIELDS:
            values[key] = vertex_function_from_config(graph, value, anchors, key).values
        elif key in _VERTEX_ID_FIELDS:
            values[key] = _resolve_vertex(anchors, value)
            graph.index(values[key])
        elif key == "a_table":
            values[key] = tuple((float(r), float(a)) for r, a in value)
        elif key == "sublevels":
            values[key] = tuple(float(b) for b in value)
        else:
            values[key] = float(value)
    return HypothesisParams(**values)


def _load_graph(data: Mapping[str, Any], base_dir: Optional[Path]) -> WeightedGraph:
    # Imported here: the I/O service depends on this module for solutions
    from src.services.io_service import graph_from_dict, load_graph

    source = data.get("graph")
    if source is None:
        raise GraphFormatError("problem configuration has no graph")
    if isinstance(source, (str, Path)):
        path = Path(source)
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        return load_graph(path)
    if isinstance(source, Mapping):
        return graph_from_dict(source)
    raise GraphFormatError(f"unsupported graph reference {source!r}")


def load_problem(config: ConfigSource, graph: Optional[WeightedGraph] = None) -> ProblemSpec:
    """
    Build a ProblemSpec from a configuration mapping or JSON file.

    Args:
        config: Mapping or path to a JSON file.
        graph: Optional graph overriding the configuration's own reference.

    Raises:
        InputFileError: If a file cannot be read.
        GraphFormatError: If the graph cannot be parsed.
        GraphValidationError: If the graph is invalid.
        ProblemConfigError: If a hypothesis or configuration entry is violated.
        ExpressionParseError: If an expression does not parse.
    """
    from src.services.io_service import read_json

    base_dir: Optional[Path] = None
    if isinstance(config, (str, Path)):
        base_dir = Path(config).parent
        config = read_json(Path(config))
    if not isinstance(config, Mapping):
        raise ProblemConfigError("problem configuration must be a JSON object")

    if graph is None:
        graph = _load_graph(config, base_dir)
    require_valid(graph)
    anchors: Dict[str, str] = dict(config.get("anchors", {}))
    for name, vertex in anchors.items():
        graph.index(vertex)

    preset = config.get("preset")
    try:
        spec = _build_spec(graph, config, anchors, preset)
    except KeyError as e:
        if isinstance(e, UnknownVertexError):
            raise
        raise ProblemConfigError(f"missing configuration entry {e}") from e

    logger.info(
        f"Loaded problem '{spec.name}': {graph.n} vertices, p={spec.p}, q={spec.q}, h0={spec.h0:.6g}"
    )
    return spec


def _build_spec(
    graph: WeightedGraph, config: Mapping[str, Any], anchors: Dict[str, str], preset: Optional[str]
) -> ProblemSpec:
    if preset == "example51":
        return preset_example51(
            graph,
            anchors["x1"],
            anchors["x2"],
            float(config.get("lambda1", 1.0)),
            float(config.get("lambda2", 1.0)),
        )

    if preset == "example52":
        e1 = e2 = None
        if "e1" in config:
            e1 = vertex_function_from_config(graph, config["e1"], anchors, "e1")
        if "e2" in config:
            e2 = vertex_function_from_config(graph, config["e2"], anchors, "e2")
        lam = config.get("lambda")
        return preset_example52(
            graph,
            anchors["x1"],
            anchors["x2"],
            lam=None if lam is None else float(lam),
            c1=float(config.get("c1", 1.0)),
            e1=e1,
            e2=e2,
            lambda_fraction=float(config.get("lambda_fraction", 0.5)),
        )

    if preset == "single-equation":
        h = vertex_function_from_config(graph, config["h"], anchors, "h")
        e = vertex_function_from_config(graph, config["e"], anchors, "e")
        F1d = nonlinearity_from_config(graph, config["F"], anchors, h=h, single=True)
        hypothesis = hypothesis_from_config(graph, config.get("hypothesis", {}), anchors)
        return preset_single_equation(
            graph,
            float(config["p"]),
            h,
            e,
            float(config["epsilon"]),
            F1d,
            h0=config.get("h0"),
            hypothesis=hypothesis,
        )

    if preset is not None:
        raise ProblemConfigError(f"unknown preset {preset!r}")

    h1 = vertex_function_from_config(graph, config["h1"], anchors, "h1")
    h2 = vertex_function_from_config(graph, config.get("h2", config["h1"]), anchors, "h2")
    e1 = vertex_function_from_config(graph, config["e1"], anchors, "e1")
    e2 = vertex_function_from_config(graph, config.get("e2", 0.0), anchors, "e2")
    return ProblemSpec(
        graph=graph,
        p=float(config["p"]),
        q=float(config["q"]),
        h1=h1,
        h2=h2,
        e1=e1,
        e2=e2,
        lambda1=float(config.get("lambda1", config.get("lambda", 1.0))),
        lambda2=float(config.get("lambda2", config.get("lambda", 1.0))),
        nonlinearity=nonlinearity_from_config(graph, config["F"], anchors, h=h1),
        h0=config.get("h0"),
        hypothesis=hypothesis_from_config(graph, config.get("hypothesis", {}), anchors),
        name=str(config.get("name", "custom")),
        anchors=anchors,
    )
