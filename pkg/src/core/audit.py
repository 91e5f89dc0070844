"""
Sampling-based audit of the hypotheses on the nonlinearity and potentials.

Each condition receives one of three verdicts:
- HOLDS: no sampled point violates it (evidence, not proof)
- VIOLATED: a sampled point (the witness) or a norm inequality fails
- NOT_APPLICABLE: the constants the condition needs were not supplied

Samples are (vertex, s, t) triples: a regular grid over [-span, span]^2 at
every vertex plus seeded uniform random triples. Conditions restricted to a
neighbourhood of the origin or to a range of s get grids scaled to that
range. Verdicts are deterministic for a fixed grid and seed.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from src.core.exceptions import ParameterError
from src.core.params import spike_constants
from src.core.problem import HypothesisParams, ProblemSpec
from src.services.logging_service import get_logger

logger = get_logger(__name__)

# Relative slack allowed before a sampled inequality counts as violated
REL_TOL = 1e-9

# The negative-energy construction only needs the lower bound with a minus sign
C4_CHECKED_FORM = "F(x4,s,s) >= -K3 |s|^beta3 for 0 < s < l2, not the stated F(x4,s,s) >= K3 |s|^beta3"

Samples = Tuple[np.ndarray, np.ndarray, np.ndarray]


class Verdict(str, Enum):
    HOLDS = "holds"
    VIOLATED = "violated"
    NOT_APPLICABLE = "not-applicable"


@dataclass(frozen=True)
class Witness:
    """Sampled point where lhs <= rhs fails."""
    vertex: str
    s: float
    t: float
    lhs: float
    rhs: float

    def to_dict(self) -> Dict[str, Any]:
        return {"vertex": self.vertex, "s": self.s, "t": self.t, "lhs": self.lhs, "rhs": self.rhs}


@dataclass(frozen=True)
class ConditionResult:
    condition: str
    verdict: Verdict
    witness: Optional[Witness] = None
    notes: List[str] = field(default_factory=list)
    # Inequality actually sampled, when it differs from the stated condition
    checked_form: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "condition": self.condition,
            "verdict": self.verdict.value,
            "witness": self.witness.to_dict() if self.witness else None,
            "notes": list(self.notes),
            "checked_form": self.checked_form,
        }


@dataclass(frozen=True)
class AuditGrid:
    """Sample set description."""
    span: float = 10.0
    points: int = 41
    random_points: int = 2000
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.span > 0:
            raise ParameterError(f"audit span must be positive, got {self.span}")
        if self.points < 2 or self.random_points < 0:
            raise ParameterError("audit grid needs at least 2 points per axis")

    @classmethod
    def from_config(cls, config: Any) -> "AuditGrid":
        values = config.audit_defaults
        return cls(
            span=float(values.get("span", cls.span)),
            points=int(values.get("points", cls.points)),
            random_points=int(values.get("random_points", cls.random_points)),
            seed=int(values.get("seed", cls.seed)),
        )

    def plane(self, n: int, radius: Optional[float] = None) -> Samples:
        """Triples over the square of half-width radius (default span), open disc when radius is given."""
        half = self.span if radius is None else radius
        axis = np.linspace(-half, half, self.points)
        s, t = np.meshgrid(axis, axis, indexing="ij")
        rng = np.random.default_rng(self.seed)
        idx = np.concatenate([np.repeat(np.arange(n), s.size), rng.integers(0, n, self.random_points)])
        s_all = np.concatenate([np.tile(s.ravel(), n), rng.uniform(-half, half, self.random_points)])
        t_all = np.concatenate([np.tile(t.ravel(), n), rng.uniform(-half, half, self.random_points)])
        if radius is not None:
            keep = np.hypot(s_all, t_all) < radius
            idx, s_all, t_all = idx[keep], s_all[keep], t_all[keep]
        return idx, s_all, t_all

    def line(self, n: int, lo: float, hi: float) -> Tuple[np.ndarray, np.ndarray]:
        """(vertex index, value) pairs with values in the open interval (lo, hi)."""
        values = np.linspace(lo, hi, 10 * self.points + 2)[1:-1]
        rng = np.random.default_rng(self.seed)
        values = np.concatenate([values, rng.uniform(lo, hi, self.random_points // 4 + 1)])
        values = values[(values > lo) & (values < hi)]
        return np.repeat(np.arange(n), values.size), np.tile(values, n)


@dataclass(frozen=True)
class AuditReport:
    results: List[ConditionResult]
    # level B -> (measure of {h1 <= B}, measure of {h2 <= B})
    sublevel_measures: Dict[float, Tuple[float, float]] = field(default_factory=dict)

    def __getitem__(self, condition: str) -> ConditionResult:
        for result in self.results:
            if result.condition == condition:
                return result
        raise KeyError(condition)

    @property
    def violated(self) -> List[str]:
        return [r.condition for r in self.results if r.verdict is Verdict.VIOLATED]

    @property
    def caveats(self) -> List[str]:
        """One line per condition that was sampled in a form other than its statement."""
        return [f"{r.condition} checked as {r.checked_form}" for r in self.results if r.checked_form]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "results": [r.to_dict() for r in self.results],
            "sublevel_measures": {str(b): list(m) for b, m in self.sublevel_measures.items()},
            "caveats": self.caveats,
            "note": "verdicts come from finite samples; HOLDS is evidence, VIOLATED is definite",
        }


# ─── Helpers ──────────────────────────────────────────────────────────────


def _first_violation(
    spec: ProblemSpec, idx: np.ndarray, s: np.ndarray, t: np.ndarray, lhs: np.ndarray, rhs: np.ndarray
) -> Optional[Witness]:
    """Witness at the largest excess of lhs over rhs, or None when lhs <= rhs everywhere."""
    with np.errstate(invalid="ignore", over="ignore"):
        excess = lhs - rhs - REL_TOL * (1.0 + np.abs(rhs))
    excess = np.where(np.isnan(excess), np.inf, excess)
    if excess.size == 0 or not np.max(excess) > 0:
        return None
    k = int(np.argmax(excess))
    return Witness(
        vertex=spec.graph.vertices[int(idx[k])],
        s=float(s[k]),
        t=float(t[k]),
        lhs=float(lhs[k]),
        rhs=float(rhs[k]),
    )


def _verdict(name: str, witness: Optional[Witness], notes: Optional[List[str]] = None) -> ConditionResult:
    return ConditionResult(
        condition=name,
        verdict=Verdict.VIOLATED if witness else Verdict.HOLDS,
        witness=witness,
        notes=notes or [],
    )


def _missing(name: str, *labels: str) -> ConditionResult:
    return ConditionResult(name, Verdict.NOT_APPLICABLE, notes=[f"needs {', '.join(labels)}"])


def _sup(values: np.ndarray) -> float:
    return float(np.max(np.abs(values)))


def _perturbed(spec: ProblemSpec, x: str) -> bool:
    i = spec.graph.index(x)
    return spec.e1.values[i] + spec.e2.values[i] > 0


# ─── Conditions ───────────────────────────────────────────────────────────


def _check_origin(spec: ProblemSpec) -> ConditionResult:
    bad = spec.nonlinearity.origin_violations()
    if not bad:
        return ConditionResult("origin", Verdict.HOLDS)
    i = spec.graph.index(bad[0])
    F, _, _ = spec.nonlinearity.evaluate(np.array([i]), np.zeros(1), np.zeros(1))
    return ConditionResult("origin", Verdict.VIOLATED, Witness(bad[0], 0.0, 0.0, float(abs(F[0])), 0.0))


def _check_h1(spec: ProblemSpec) -> ConditionResult:
    floor = float(min(np.min(spec.h1.values), np.min(spec.h2.values)))
    witness = None
    if not 0 < spec.h0 <= floor:
        vertex = spec.graph.vertices[int(np.argmin(np.minimum(spec.h1.values, spec.h2.values)))]
        witness = Witness(vertex, 0.0, 0.0, spec.h0, floor)
    return _verdict("H1", witness, [f"h0 = {spec.h0:.6g}, min h = {floor:.6g}"])


def _check_h2_sublevels(spec: ProblemSpec, hp: HypothesisParams) -> Tuple[ConditionResult, Dict[float, Tuple[float, float]]]:
    if not hp.sublevels:
        return _missing("H2'", "sublevels"), {}
    mu = spec.graph.mu
    measures = {
        float(B): (float(np.sum(mu[spec.h1.values <= B])), float(np.sum(mu[spec.h2.values <= B])))
        for B in hp.sublevels
    }
    notes = ["finite graph: every sublevel set has finite measure"]
    return ConditionResult("H2'", Verdict.HOLDS, notes=notes), measures


def _a_of(table: Tuple[Tuple[float, float], ...], radius: np.ndarray) -> np.ndarray:
    """Nondecreasing step majorant: value of the first entry whose radius covers r, inf beyond the table."""
    ordered = sorted(table)
    radii = np.array([r for r, _ in ordered])
    values = np.maximum.accumulate(np.array([a for _, a in ordered]))
    k = np.searchsorted(radii, radius, side="left")
    return np.where(k < len(radii), values[np.minimum(k, len(radii) - 1)], np.inf)


def _check_f0(spec: ProblemSpec, hp: HypothesisParams, samples: Samples) -> ConditionResult:
    if hp.a_table is None or hp.b is None:
        return _missing("F0", "a_table", "b")
    idx, s, t = samples
    radius = np.hypot(s, t)
    inside = radius <= max(r for r, _ in hp.a_table)
    idx, s, t, radius = idx[inside], s[inside], t[inside], radius[inside]
    F, Fs, Ft = spec.nonlinearity.evaluate(idx, s, t)
    lhs = np.maximum.reduce([np.abs(F), np.abs(Fs), np.abs(Ft)])
    rhs = _a_of(hp.a_table, radius) * hp.b[idx]
    notes = [f"sampled |(s,t)| <= {max(r for r, _ in hp.a_table):g}"]
    return _verdict("F0", _first_violation(spec, idx, s, t, lhs, rhs), notes)


def _growth_violation(spec: ProblemSpec, samples: Samples, bound_s, bound_t) -> Optional[Witness]:
    idx, s, t = samples
    _, Fs, Ft = spec.nonlinearity.evaluate(idx, s, t)
    with np.errstate(over="ignore"):
        witness = _first_violation(spec, idx, s, t, np.abs(Fs), bound_s(idx, np.abs(s), np.abs(t)))
        if witness is None:
            witness = _first_violation(spec, idx, s, t, np.abs(Ft), bound_t(idx, np.abs(s), np.abs(t)))
    return witness


def _check_f1(spec: ProblemSpec, hp: HypothesisParams, samples: Samples) -> ConditionResult:
    if hp.f1 is None or hp.f2 is None or hp.g1 is None or hp.g2 is None:
        return _missing("F1", "f1", "f2", "g1", "g2")
    p, q, h0 = spec.p, spec.q, spec.h0
    f1, f2 = _sup(hp.f1), _sup(hp.f2)
    notes = []
    cap1 = min(h0 / 2.0, p * h0 / (q * (p - 1.0)))
    cap2 = h0 - q * (p - 1.0) / p * f1
    norms_ok = f1 < cap1 and f2 < cap2
    notes.append(f"||f1|| = {f1:.6g} (< {cap1:.6g}), ||f2|| = {f2:.6g} (< {cap2:.6g})")
    witness = _growth_violation(
        spec,
        samples,
        lambda i, a, b: hp.f1[i] * (a ** (p - 1.0) + b ** ((p * q - q) / p)) + hp.g1[i],
        lambda i, a, b: hp.f2[i] * (a ** p + b ** (q - 1.0)) + hp.g2[i],
    )
    if witness is None and not norms_ok:
        return ConditionResult("F1", Verdict.VIOLATED, notes=notes + ["norm condition on f1, f2 fails"])
    return _verdict("F1", witness, notes)


def _check_f1_prime(spec: ProblemSpec, hp: HypothesisParams, samples: Samples) -> ConditionResult:
    if hp.f1 is None or hp.f2 is None or hp.g1 is None or hp.g2 is None:
        return _missing("F1'", "f1", "f2", "g1", "g2")
    p, q, h0 = spec.p, spec.q, spec.h0
    f1, f2 = _sup(hp.f1), _sup(hp.f2)
    cap1 = min(h0 / 2.0, q * h0 / (p * (q - 1.0)))
    # ||f2|| appears on both sides of the second norm condition
    cap2 = h0 - p * (q - 1.0) / q * f2
    notes = [
        f"||f1|| = {f1:.6g} (< {cap1:.6g}), ||f2|| = {f2:.6g} (< {cap2:.6g})",
        "the second norm condition compares ||f2|| with h0 - p(q-1)/q ||f2||",
    ]
    norms_ok = f1 < cap1 and f2 < cap2
    witness = _growth_violation(
        spec,
        samples,
        lambda i, a, b: hp.f2[i] * (b ** q + a ** (p - 1.0)) + hp.g1[i],
        lambda i, a, b: hp.f1[i] * (b ** (q - 1.0) + a ** ((q * p - p) / q)) + hp.g2[i],
    )
    if witness is None and not norms_ok:
        return ConditionResult("F1'", Verdict.VIOLATED, notes=notes + ["norm condition on f1, f2 fails"])
    return _verdict("F1'", witness, notes)


def _check_f1_single(spec: ProblemSpec, hp: HypothesisParams, grid: AuditGrid) -> ConditionResult:
    if not spec.single_equation:
        return ConditionResult("f1", Verdict.NOT_APPLICABLE, notes=["single-equation problems only"])
    if hp.f1 is None or hp.g1 is None:
        return _missing("f1", "f1", "g1")
    idx, s = grid.line(spec.graph.n, -grid.span, grid.span)
    t = np.zeros_like(s)
    _, Fs, _ = spec.nonlinearity.evaluate(idx, s, t)
    rhs = hp.f1[idx] * np.abs(s) ** (spec.p - 1.0) + hp.g1[idx]
    witness = _first_violation(spec, idx, s, t, np.abs(Fs), rhs)
    f1 = _sup(hp.f1)
    notes = [f"||f1|| = {f1:.6g} (< h0 = {spec.h0:.6g})"]
    if witness is None and not f1 < spec.h0:
        return ConditionResult("f1", Verdict.VIOLATED, notes=notes + ["||f1|| must be below h0"])
    return _verdict("f1", witness, notes)


def _check_f2_branch(
    spec: ProblemSpec, grid: AuditGrid, K: np.ndarray, beta: float, anchor: str, on_s: bool
) -> Tuple[Optional[Witness], List[str]]:
    notes = []
    i = spec.graph.index(anchor)
    load = spec.e1.values if on_s else spec.e2.values
    if not beta > 1:
        notes.append(f"exponent must exceed 1, got {beta:g}")
    if not K[i] > 0:
        notes.append(f"K must be positive at {anchor}")
    if not load[i] > 0:
        notes.append(f"perturbation must be positive at {anchor}")
    idx, r = grid.line(spec.graph.n, -grid.span, grid.span)
    zeros = np.zeros_like(r)
    s, t = (r, zeros) if on_s else (zeros, r)
    F, _, _ = spec.nonlinearity.evaluate(idx, s, t)
    witness = _first_violation(spec, idx, s, t, -F, K[idx] * np.abs(r) ** beta)
    return witness, notes


def _check_f2(spec: ProblemSpec, hp: HypothesisParams, grid: AuditGrid) -> ConditionResult:
    branches = []
    if hp.K1 is not None and hp.beta1 is not None and hp.x1 is not None:
        branches.append(("(i)", _check_f2_branch(spec, grid, hp.K1, hp.beta1, hp.x1, True)))
    if hp.K2 is not None and hp.beta2 is not None and hp.x2 is not None:
        branches.append(("(ii)", _check_f2_branch(spec, grid, hp.K2, hp.beta2, hp.x2, False)))
    if not branches:
        return _missing("F2", "K1, beta1, x1 or K2, beta2, x2")

    notes = []
    first_witness = None
    for label, (witness, problems) in branches:
        if witness is None and not problems:
            return ConditionResult("F2", Verdict.HOLDS, notes=[f"alternative {label} holds"])
        notes.extend(f"{label}: {problem}" for problem in problems)
        if witness is not None:
            notes.append(f"{label}: sampled inequality fails")
            first_witness = first_witness or witness
    return ConditionResult("F2", Verdict.VIOLATED, first_witness, notes)


def _check_c1(spec: ProblemSpec, hp: HypothesisParams, grid: AuditGrid) -> ConditionResult:
    if hp.l0 is None:
        return _missing("C1", "l0")
    p, q, h0 = spec.p, spec.q, spec.h0
    c = h0 / (q + 1.0)
    samples = grid.plane(spec.graph.n, radius=hp.l0)
    witness = _growth_violation(
        spec,
        samples,
        lambda i, a, b: c * (a ** (p - 1.0) + b ** ((p * q - q) / p)),
        lambda i, a, b: c * (a ** p + b ** (q - 1.0)),
    )
    notes = [f"sampled |(s,t)| < l0 = {hp.l0:g}"]
    if witness is None:
        idx, s, t = samples
        F, _, _ = spec.nonlinearity.evaluate(idx, s, t)
        growth = 2.0 * h0 * np.abs(s) ** p / (p * (q + 1.0)) + (p * q - q + p) * h0 * np.abs(t) ** q / (
            p * q * (q + 1.0)
        )
        witness = _first_violation(spec, idx, s, t, np.abs(F), growth)
        if witness is not None:
            notes.append("derived bound on |F| fails")
    return _verdict("C1", witness, notes)


def _check_c2(spec: ProblemSpec, hp: HypothesisParams, grid: AuditGrid) -> ConditionResult:
    if hp.l1 is None or hp.M is None or hp.x3 is None:
        return _missing("C2", "l1", "M", "x3")
    notes = []
    if not _perturbed(spec, hp.x3):
        return ConditionResult("C2", Verdict.VIOLATED, notes=[f"e1 + e2 must be positive at {hp.x3}"])
    threshold = spike_constants(spec, hp.x3).M_threshold
    notes.append(f"M = {hp.M:.6g}, threshold {threshold:.6g}")
    i = spec.graph.index(hp.x3)
    _, s = grid.line(1, hp.l1, hp.l1 + grid.span)
    idx = np.full(s.shape, i)
    F, _, _ = spec.nonlinearity.evaluate(idx, s, s)
    witness = _first_violation(spec, idx, s, s, hp.M * (s ** spec.p + s ** spec.q), F)
    if witness is None and not hp.M > threshold:
        return ConditionResult("C2", Verdict.VIOLATED, notes=notes + ["M must exceed the threshold"])
    return _verdict("C2", witness, notes)


def _check_c3(spec: ProblemSpec, hp: HypothesisParams, samples: Samples) -> ConditionResult:
    if hp.nu is None or hp.A is None:
        return _missing("C3", "nu", "A")
    idx, s, t = samples
    F, Fs, Ft = spec.nonlinearity.evaluate(idx, s, t)
    lhs = hp.nu * F - Fs * s - Ft * t
    rhs = hp.A * (np.abs(s) ** spec.p + np.abs(t) ** spec.q)
    return _verdict("C3", _first_violation(spec, idx, s, t, lhs, rhs), [f"nu = {hp.nu:g}, A = {hp.A:g}"])


def _check_c4(spec: ProblemSpec, hp: HypothesisParams, grid: AuditGrid) -> ConditionResult:
    if hp.l2 is None or hp.beta3 is None or hp.K3 is None or hp.x4 is None:
        return _missing("C4", "l2", "beta3", "K3", "x4")
    i = spec.graph.index(hp.x4)
    problems = []
    if not hp.beta3 > 1:
        problems.append(f"beta3 must exceed 1, got {hp.beta3:g}")
    if not hp.K3[i] > 0:
        problems.append(f"K3 must be positive at {hp.x4}")
    if not _perturbed(spec, hp.x4):
        problems.append(f"e1 + e2 must be positive at {hp.x4}")

    _, s = grid.line(1, 0.0, hp.l2)
    idx = np.full(s.shape, i)
    F, _, _ = spec.nonlinearity.evaluate(idx, s, s)
    power = hp.K3[i] * np.abs(s) ** hp.beta3
    witness = _first_violation(spec, idx, s, s, -power, F)
    notes = []
    if _first_violation(spec, idx, s, s, power, F) is not None:
        notes.append("the stated form F(x4,s,s) >= K3 |s|^beta3 fails on the sample")
    verdict = Verdict.VIOLATED if witness or problems else Verdict.HOLDS
    return ConditionResult("C4", verdict, witness, notes + problems, checked_form=C4_CHECKED_FORM)


# ─── Entry point ──────────────────────────────────────────────────────────


def audit_conditions(
    spec: ProblemSpec, hp: Optional[HypothesisParams] = None, grid: Optional[AuditGrid] = None
) -> AuditReport:
    """
    Audit every hypothesis condition against the problem's data.

    Args:
        spec: Problem.
        hp: Hypothesis constants; defaults to spec.hypothesis.
        grid: Sample description; defaults to AuditGrid().

    Returns:
        AuditReport with one result per condition, in a fixed order.
    """
    hp = spec.hypothesis if hp is None else hp
    grid = grid or AuditGrid()
    samples = grid.plane(spec.graph.n)
    logger.info(f"Auditing {spec.name} on {samples[0].size} sampled triples")

    h2_result, measures = _check_h2_sublevels(spec, hp)
    results = [
        _check_origin(spec),
        _check_h1(spec),
        h2_result,
        _check_f0(spec, hp, samples),
        _check_f1(spec, hp, samples),
        _check_f1_prime(spec, hp, samples),
        _check_f1_single(spec, hp, grid),
        _check_f2(spec, hp, grid),
        _check_c1(spec, hp, grid),
        _check_c2(spec, hp, grid),
        _check_c3(spec, hp, samples),
        _check_c4(spec, hp, grid),
    ]
    for result in results:
        if result.verdict is Verdict.VIOLATED:
            logger.warning(f"Condition {result.condition} violated: {result.witness or result.notes}")
    return AuditReport(results=results, sublevel_measures=measures)
