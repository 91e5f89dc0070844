"""
Critical-point searches for the energy functional.

Three searches are provided, one per existence mechanism:
- minimize_global: Armijo descent from several starts (coercive case)
- mountain_pass: a discretised path from (0, 0) to a negative-energy
  endpoint whose highest node is pushed down and then refined to a saddle
  by trust-region steps that climb the lowest Hessian mode
- minimize_in_ball: projected descent in the W-norm ball of radius rho

Every search returns a SolveReport whose energy and residual are recomputed
from the final state. Nonconvergence is a flag on the report, not an error.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import eigh, eigvalsh

from src.core.calculus import VertexFunction
from src.core.exceptions import (
    EndpointNotFoundError,
    NonFiniteValueError,
    ParameterError,
    SolverPreconditionError,
)
from src.core.functional import Functional, State
from src.core.line_search import BacktrackingLineSearch, safe_evaluate
from src.core.params import (
    RhoAlpha,
    ball_constants,
    rho_alpha,
    semitrivial_bounds,
    spike_constants,
    spike_energy_bound,
)
from src.core.problem import ProblemSpec
from src.services.logging_service import get_logger

logger = get_logger(__name__)

# Largest spike scale tried by find_endpoint
MAX_ENDPOINT_SCALE = 2.0 ** 60

# Relative margin separating interior ball iterates from the sphere
INTERIOR_MARGIN = 1e-6

# String sweeps without a decrease of the path maximum before refinement
STRING_PATIENCE = 100

# Cap on saddle refinement steps; each one rebuilds the Hessian
SADDLE_STEPS = 500


class Classification(str, Enum):
    TRIVIAL = "trivial"
    SEMI_TRIVIAL_U = "semi-trivial-u"
    SEMI_TRIVIAL_V = "semi-trivial-v"
    NONTRIVIAL = "nontrivial"


class SolveMode(str, Enum):
    MINIMIZE = "minimize"
    BALL = "ball"
    MOUNTAIN_PASS = "mountain-pass"


@dataclass(frozen=True)
class BoundCheck:
    """A named inequality lhs <= rhs (or as the name says); holds is None when not applicable."""
    name: str
    lhs: float
    rhs: float
    holds: Optional[bool]

    def to_dict(self) -> Dict[str, Any]:
        rhs = self.rhs if np.isfinite(self.rhs) else None
        return {"name": self.name, "lhs": self.lhs, "rhs": rhs, "holds": self.holds}


@dataclass(frozen=True)
class SolveOptions:
    """Tuning knobs shared by the three searches."""
    max_iters: int = 100000
    grad_tol: float = 1e-9
    armijo_c: float = 1e-4
    armijo_shrink: float = 0.5
    init_step: float = 1.0
    path_nodes: int = 41
    path_sweeps: int = 2000
    restarts: int = 8
    seed: int = 0
    spectral_steps: bool = True
    threads: Optional[int] = None
    triviality_tolerance: float = 1e-8

    def __post_init__(self) -> None:
        if self.max_iters < 1:
            raise ParameterError(f"max_iters must be positive, got {self.max_iters}")
        if not self.grad_tol > 0:
            raise ParameterError(f"grad_tol must be positive, got {self.grad_tol}")
        if not 0 < self.armijo_c < 1:
            raise ParameterError(f"armijo_c must lie in (0, 1), got {self.armijo_c}")
        if not 0 < self.armijo_shrink < 1:
            raise ParameterError(f"armijo_shrink must lie in (0, 1), got {self.armijo_shrink}")
        if not self.init_step > 0:
            raise ParameterError(f"init_step must be positive, got {self.init_step}")
        if self.path_nodes < 3:
            raise ParameterError(f"path_nodes must be at least 3, got {self.path_nodes}")
        if self.path_sweeps < 0 or self.restarts < 0:
            raise ParameterError("path_sweeps and restarts must be nonnegative")
        if self.threads is not None and self.threads < 1:
            raise ParameterError(f"threads must be positive, got {self.threads}")

    @classmethod
    def from_config(cls, config: Any, **overrides: Any) -> "SolveOptions":
        """
        Build options from a ConfigService, with keyword overrides.

        None-valued overrides are ignored so CLI flags can be passed through.
        """
        values: Dict[str, Any] = dict(config.solver_defaults)
        values["threads"] = config.threads
        values["triviality_tolerance"] = config.triviality_tolerance
        values.update({k: v for k, v in overrides.items() if v is not None})
        known = set(cls.__dataclass_fields__)
        return cls(**{k: v for k, v in values.items() if k in known})

    def line_search(self) -> BacktrackingLineSearch:
        return BacktrackingLineSearch(
            contraction_factor=self.armijo_shrink,
            sufficient_decrease=self.armijo_c,
            initial_step_size=self.init_step,
            spectral=self.spectral_steps,
        )


@dataclass(frozen=True)
class SolveReport:
    state: State
    energy: float
    residual_sup: float
    iterations: int
    classification: Classification
    bound_checks: List[BoundCheck]
    mode: SolveMode
    converged: bool
    diagnostics: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        """JSON-ready mapping with exactly the report's fields."""
        return {
            "state": {"u": self.state.u.to_dict(), "v": self.state.v.to_dict()},
            "energy": self.energy,
            "residual_sup": self.residual_sup,
            "iterations": self.iterations,
            "classification": self.classification.value,
            "bound_checks": [check.to_dict() for check in self.bound_checks],
            "mode": self.mode.value,
            "converged": self.converged,
            "diagnostics": list(self.diagnostics),
        }


# ─── Descent ──────────────────────────────────────────────────────────────


@dataclass
class DescentRun:
    """Outcome of one descent; history holds the energy after each accepted step."""
    x: np.ndarray
    energy: float
    iterations: int
    converged: bool
    pinned: bool = False
    history: List[float] = field(default_factory=list)


def descend(
    functional: Functional,
    x0: np.ndarray,
    opts: SolveOptions,
    project: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    rho: Optional[float] = None,
) -> DescentRun:
    """
    Armijo descent along the negative mu-weighted gradient.

    With a projection the step follows the projection arc, and an iterate on
    the sphere of radius rho counts as converged once the projected gradient
    step vanishes to grad_tol.
    """
    weights = np.tile(functional.graph.mu, 2)
    search = opts.line_search()
    x = project(x0) if project is not None else x0.copy()
    f = safe_evaluate(functional.energy, x)
    run = DescentRun(x=x, energy=f, iterations=0, converged=False, history=[f])

    for iteration in range(opts.max_iters):
        run.iterations = iteration
        r = functional.residual(x)
        g = weights * r
        on_sphere = (
            project is not None
            and rho is not None
            and functional.w_norm(x) >= rho * (1.0 - INTERIOR_MARGIN)
        )
        if not on_sphere and np.max(np.abs(r)) <= opts.grad_tol:
            run.converged = True
            break
        if on_sphere and np.max(np.abs(project(x - g) - x)) <= opts.grad_tol:
            run.converged = True
            break

        if project is None:
            step = search.search(functional.energy, x, f, g, -g)
        else:
            step = search.projected_search(functional.energy, project, x, f, g, -g)
        if not step.accepted:
            logger.debug(f"Descent stalled at iteration {iteration}, residual {np.max(np.abs(r)):.3e}")
            break
        x, f = step.x, step.f
        run.history.append(f)
    else:
        run.iterations = opts.max_iters

    run.x, run.energy = x, f
    if project is not None and rho is not None:
        run.pinned = functional.w_norm(x) >= rho * (1.0 - INTERIOR_MARGIN)
    return run


def _run_starts(
    functional: Functional,
    starts: Sequence[np.ndarray],
    opts: SolveOptions,
    project: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    rho: Optional[float] = None,
) -> List[DescentRun]:
    workers = opts.threads or len(starts)
    with ThreadPoolExecutor(max_workers=max(1, min(workers, len(starts)))) as pool:
        runs = list(pool.map(lambda x0: descend(functional, x0, opts, project, rho), starts))
    for k, run in enumerate(runs):
        logger.debug(
            f"Start {k}: energy {run.energy:.6e}, {run.iterations} iterations, converged={run.converged}"
        )
    return runs


def _select(runs: Sequence[DescentRun]) -> int:
    """Index of the best run: converged before unconverged, then energy, then start index."""
    return min(range(len(runs)), key=lambda k: (not runs[k].converged, runs[k].energy, k))


def _build_report(
    spec: ProblemSpec,
    x: np.ndarray,
    mode: SolveMode,
    iterations: int,
    converged: bool,
    opts: SolveOptions,
    extra_checks: Sequence[BoundCheck] = (),
    diagnostics: Sequence[str] = (),
) -> SolveReport:
    functional = Functional(spec)
    state = State.from_vector(spec.graph, x)
    residual_sup = float(np.max(np.abs(functional.residual(x))))
    classification, checks = classify(spec, state, opts.triviality_tolerance)
    return SolveReport(
        state=state,
        energy=functional.energy(x),
        residual_sup=residual_sup,
        iterations=iterations,
        classification=classification,
        bound_checks=list(checks) + list(extra_checks),
        mode=mode,
        converged=converged,
        diagnostics=list(diagnostics),
    )


def _probe_vertex(spec: ProblemSpec) -> str:
    hp = spec.hypothesis
    if hp.x1 is not None:
        return hp.x1
    if "x1" in spec.anchors:
        return spec.anchors["x1"]
    load = np.abs(spec.e1.values) + np.abs(spec.e2.values)
    return spec.graph.vertices[int(np.argmax(load))]


# ─── Global minimisation ──────────────────────────────────────────────────


def minimize_global(spec: ProblemSpec, opts: Optional[SolveOptions] = None) -> SolveReport:
    """
    Minimise the energy from the zero state, the probes theta 1_x1 in the
    u channel (theta in +-0.1, +-1) and opts.restarts random states.

    Returns:
        The lowest-energy converged run, or the lowest-energy run flagged
        as not converged when no start converged.
    """
    opts = opts or SolveOptions()
    functional = Functional(spec)
    n = spec.graph.n
    rng = np.random.default_rng(opts.seed)

    probe = spec.graph.index(_probe_vertex(spec))
    starts = [np.zeros(2 * n)]
    for theta in (0.1, -0.1, 1.0, -1.0):
        x0 = np.zeros(2 * n)
        x0[probe] = theta
        starts.append(x0)
    starts.extend(rng.uniform(-1.0, 1.0, 2 * n) for _ in range(opts.restarts))

    logger.info(f"Global minimisation of {spec.name} from {len(starts)} starts")
    runs = _run_starts(functional, starts, opts)
    best = _select(runs)
    run = runs[best]

    diagnostics = []
    if not run.converged:
        diagnostics.append(f"no start converged within {opts.max_iters} iterations")
        logger.warning(f"Global minimisation did not converge; best energy {run.energy:.6e}")
    report = _build_report(
        spec,
        run.x,
        SolveMode.MINIMIZE,
        sum(r.iterations for r in runs),
        run.converged,
        opts,
        diagnostics=diagnostics,
    )
    logger.info(
        f"Global minimum from start {best}: energy {report.energy:.6e}, "
        f"residual {report.residual_sup:.3e}, {report.classification.value}"
    )
    return report


# ─── Endpoint ─────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class EndpointStep:
    s: float
    energy: float
    w_norm: float
    bound: Optional[float]


@dataclass(frozen=True)
class EndpointSearch:
    """The endpoint s(1_x3, 1_x3) and every scale tried on the way."""
    state: State
    s: float
    trace: List[EndpointStep]


def _default_rho(spec: ProblemSpec) -> float:
    hp = spec.hypothesis
    if hp.l0 is None:
        raise ParameterError("rho is needed: pass it explicitly or provide l0 in the hypothesis data")
    return rho_alpha(spec, hp.l0, spec.lambda1).rho


def find_endpoint(spec: ProblemSpec, x3: Optional[str] = None, rho: Optional[float] = None) -> EndpointSearch:
    """
    Double s from 1 until s(1_x3, 1_x3) has negative energy and W-norm above rho.

    Each trace entry carries the upper energy bound from the spike constants
    when the hypothesis data provides M (otherwise the threshold is used).

    Raises:
        ParameterError: If e1(x3) + e2(x3) <= 0 or rho cannot be determined.
        EndpointNotFoundError: If s exceeds 2^60.
    """
    hp = spec.hypothesis
    x3 = x3 or hp.x3 or _probe_vertex(spec)
    rho = _default_rho(spec) if rho is None else rho
    constants = spike_constants(spec, x3)
    M = hp.M if hp.M is not None else constants.M_threshold

    functional = Functional(spec)
    spike = VertexFunction.indicator(spec.graph, x3)
    base = State(spike, spike).to_vector()
    trace: List[EndpointStep] = []
    s = 1.0
    while s <= MAX_ENDPOINT_SCALE:
        x = s * base
        value = safe_evaluate(functional.energy, x)
        norm = functional.w_norm(x)
        trace.append(EndpointStep(s=s, energy=value, w_norm=norm, bound=spike_energy_bound(spec, constants, s, M)))
        if value < 0 and norm > rho:
            logger.info(f"Endpoint found at s = {s:g}: energy {value:.6e}, W-norm {norm:.6e}")
            return EndpointSearch(state=State.from_vector(spec.graph, x), s=s, trace=trace)
        s *= 2.0
    raise EndpointNotFoundError(
        f"energy of s(1_{x3}, 1_{x3}) stayed nonnegative up to s = 2^60; the super-linear growth condition likely fails"
    )


# ─── Mountain pass ────────────────────────────────────────────────────────


def _respace(functional: Functional, nodes: np.ndarray) -> np.ndarray:
    """Redistribute interior nodes uniformly in W-norm arclength; endpoints stay."""
    lengths = np.array([functional.w_norm(b - a) for a, b in zip(nodes[:-1], nodes[1:])])
    cumulative = np.concatenate([[0.0], np.cumsum(lengths)])
    total = cumulative[-1]
    if not total > 0:
        return nodes
    targets = np.linspace(0.0, total, len(nodes))
    out = nodes.copy()
    for j in range(1, len(nodes) - 1):
        k = int(np.clip(np.searchsorted(cumulative, targets[j], side="right") - 1, 0, len(lengths) - 1))
        frac = 0.0 if lengths[k] == 0 else (targets[j] - cumulative[k]) / lengths[k]
        out[j] = nodes[k] + frac * (nodes[k + 1] - nodes[k])
    return out


def _hessian(functional: Functional, x: np.ndarray) -> np.ndarray:
    """Symmetrised central-difference Hessian of the energy from the mu-weighted gradient."""
    eps = 1e-6 * max(1.0, float(np.max(np.abs(x))))
    H = np.empty((x.size, x.size))
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = eps
        H[:, j] = (functional.gradient(x + e) - functional.gradient(x - e)) / (2.0 * eps)
    return 0.5 * (H + H.T)


def _saddle_step(g: np.ndarray, H: np.ndarray, trust: float) -> np.ndarray:
    """
    Partitioned rational-function step: uphill along the lowest Hessian mode,
    downhill along the others, clipped to the trust radius.
    """
    eigenvalues, eigenvectors = eigh(H)
    gt = eigenvectors.T @ g
    dt = np.zeros_like(gt)

    b0, g0 = eigenvalues[0], gt[0]
    shift_up = 0.5 * (b0 + np.sqrt(b0 * b0 + 4.0 * g0 * g0))
    if b0 - shift_up < 0:
        dt[0] = -g0 / (b0 - shift_up)

    b, gr = eigenvalues[1:], gt[1:]
    k = b.size
    if k:
        augmented = np.zeros((k + 1, k + 1))
        augmented[:k, :k] = np.diag(b)
        augmented[:k, k] = gr
        augmented[k, :k] = gr
        shift_down = eigvalsh(augmented)[0]
        den = b - shift_down
        dt[1:] = np.where(den > 0, -gr / np.where(den > 0, den, 1.0), 0.0)

    d = eigenvectors @ dt
    norm = float(np.linalg.norm(d))
    if norm > trust:
        d *= trust / norm
    return d


def _refine_saddle(
    functional: Functional, x: np.ndarray, opts: SolveOptions, trust: float, budget: int
) -> Tuple[np.ndarray, int, bool]:
    """
    Drive the residual of x to zero with trust-region saddle steps.

    The Hessian is rebuilt after every accepted step, so the climbing
    direction follows the current lowest mode. A step is kept only when it lowers the Euclidean
    norm of the gradient.
    """
    weights = np.tile(functional.graph.mu, 2)
    max_trust = 10.0 * trust
    r = functional.residual(x)
    merit = float(np.linalg.norm(weights * r))
    H = None
    steps = 0
    while steps < budget:
        if np.max(np.abs(r)) <= opts.grad_tol:
            return x, steps, True
        if trust <= 1e-15 * (1.0 + float(np.linalg.norm(x))):
            logger.debug(f"Saddle refinement stalled at residual {np.max(np.abs(r)):.3e}")
            break
        steps += 1
        try:
            if H is None:
                H = _hessian(functional, x)
            if not np.all(np.isfinite(H)):
                logger.debug("Non-finite Hessian in saddle refinement")
                break
            d = _saddle_step(weights * r, H, trust)
            r_trial = functional.residual(x + d)
        except NonFiniteValueError:
            trust *= 0.25
            continue
        trial_merit = float(np.linalg.norm(weights * r_trial))
        if np.isfinite(trial_merit) and trial_merit < merit:
            x, r, merit, H = x + d, r_trial, trial_merit, None
            if np.linalg.norm(d) >= 0.99 * trust:
                trust = min(2.0 * trust, max_trust)
        else:
            trust = 0.25 * float(np.linalg.norm(d))
    return x, steps, bool(np.max(np.abs(r)) <= opts.grad_tol)


def mountain_pass(
    spec: ProblemSpec,
    endpoint: State,
    opts: Optional[SolveOptions] = None,
    barrier: Optional[RhoAlpha] = None,
) -> SolveReport:
    """
    Locate a mountain-pass critical point between (0, 0) and endpoint.

    The string phase keeps path_nodes states on a piecewise-linear path; each
    sweep moves the highest interior node one Armijo step downhill and
    re-spaces the nodes by W-norm arclength. When the path maximum stops
    falling, the top node is refined to a saddle: every step recomputes a
    finite-difference Hessian, climbs along its lowest mode and descends
    along the rest, inside a trust radius that starts at a tenth of the
    endpoint's Euclidean length.

    Args:
        spec: Problem.
        endpoint: State with negative energy.
        opts: Solver options.
        barrier: rho and alpha, used for the barrier bound check.

    Raises:
        SolverPreconditionError: If energy(endpoint) >= 0.
    """
    opts = opts or SolveOptions()
    functional = Functional(spec)
    end = endpoint.to_vector()
    end_energy = functional.energy(end)
    if not end_energy < 0:
        raise SolverPreconditionError(f"mountain pass needs an endpoint with negative energy, got {end_energy:.6e}")

    weights = np.tile(spec.graph.mu, 2)
    nodes = np.linspace(0.0, 1.0, opts.path_nodes)[:, None] * end[None, :]
    energies = np.array([safe_evaluate(functional.energy, x) for x in nodes])
    logger.info(f"Mountain pass on {spec.name}: {opts.path_nodes} nodes, endpoint energy {end_energy:.6e}")

    iterations = 0
    converged = False
    best_max = np.inf
    since_best = 0
    top = 1 + int(np.argmax(energies[1:-1]))

    # String phase
    for sweep in range(opts.path_sweeps):
        top = 1 + int(np.argmax(energies[1:-1]))
        x = nodes[top]
        r = functional.residual(x)
        if np.max(np.abs(r)) <= opts.grad_tol:
            converged = True
            break
        g = weights * r
        step = opts.line_search().search(functional.energy, x, energies[top], g, -g)
        iterations += 1
        if not step.accepted:
            break
        nodes[top] = step.x
        nodes = _respace(functional, nodes)
        energies = np.array([safe_evaluate(functional.energy, x) for x in nodes])

        path_max = float(np.max(energies[1:-1]))
        if path_max < best_max - 1e-14 * (1.0 + abs(best_max)):
            best_max, since_best = path_max, 0
        else:
            since_best += 1
            if since_best >= STRING_PATIENCE:
                logger.debug(f"String phase stalled after {sweep + 1} sweeps at max energy {path_max:.6e}")
                break

    top = 1 + int(np.argmax(energies[1:-1]))
    x = nodes[top].copy()

    if not converged:
        budget = min(max(opts.max_iters - iterations, 0), SADDLE_STEPS)
        x, steps, converged = _refine_saddle(functional, x, opts, 0.1 * float(np.linalg.norm(end)), budget)
        iterations += steps
        logger.debug(f"Saddle refinement took {steps} steps, converged={converged}")

    diagnostics = []
    if min(functional.w_norm(x), functional.w_norm(x - end)) <= opts.grad_tol:
        converged = False
        diagnostics.append("path collapse: the highest node coincides with an endpoint")
    if not converged:
        diagnostics.append(f"mountain pass did not reach residual {opts.grad_tol:g}")
        logger.warning(f"Mountain pass did not converge on {spec.name}")

    value = functional.energy(x)
    checks = [BoundCheck("mountain-pass energy > 0", value, 0.0, value > 0)]
    if barrier is not None:
        floor = barrier.alpha - opts.grad_tol * barrier.rho
        checks.append(BoundCheck("energy >= alpha - grad_tol rho", value, floor, value >= floor))
    if not value > 0:
        diagnostics.append("mountain-pass energy is not positive")
    return _build_report(
        spec, x, SolveMode.MOUNTAIN_PASS, iterations, converged, opts, checks, diagnostics
    )


# ─── Ball minimisation ────────────────────────────────────────────────────


def ball_projection(functional: Functional, rho: float) -> Callable[[np.ndarray], np.ndarray]:
    """Radial projection onto the closed W-norm ball of radius rho."""
    if not rho > 0:
        raise ParameterError(f"rho must be positive, got {rho}")

    def project(x: np.ndarray) -> np.ndarray:
        norm = functional.w_norm(x)
        return x * (rho / norm) if norm > rho else x

    return project


def _spike_start(spec: ProblemSpec, functional: Functional, rho: float, x4: str) -> np.ndarray:
    """t (1_x4, 1_x4) below the start-scale bound, halved until its energy is negative."""
    constants = ball_constants(spec, x4, rho)
    spike = VertexFunction.indicator(spec.graph, x4)
    base = State(spike, spike).to_vector()
    t = 0.5 * constants.start_scale_bound
    for _ in range(60):
        if functional.energy(t * base) < 0:
            break
        t *= 0.5
    return t * base


def minimize_in_ball(
    spec: ProblemSpec,
    rho: float,
    opts: Optional[SolveOptions] = None,
    x4: Optional[str] = None,
) -> SolveReport:
    """
    Minimise the energy over the closed ball ||(u, v)||_W <= rho.

    Starts are the zero state, the spike start at x4 (when e1 + e2 > 0
    there) and opts.restarts random states rescaled to W-norm rho/2.
    """
    opts = opts or SolveOptions()
    functional = Functional(spec)
    project = ball_projection(functional, rho)
    n = spec.graph.n
    rng = np.random.default_rng(opts.seed)

    starts = [np.zeros(2 * n)]
    x4 = x4 or spec.hypothesis.x4 or _probe_vertex(spec)
    try:
        starts.append(_spike_start(spec, functional, rho, x4))
    except ParameterError as e:
        logger.debug(f"No spike start at {x4}: {e}")
    for _ in range(opts.restarts):
        x0 = rng.uniform(-1.0, 1.0, 2 * n)
        norm = functional.w_norm(x0)
        starts.append(x0 * (0.5 * rho / norm) if norm > 0 else x0)

    logger.info(f"Ball minimisation of {spec.name}, rho = {rho:.6e}, {len(starts)} starts")
    runs = _run_starts(functional, starts, opts, project, rho)
    run = runs[_select(runs)]

    diagnostics = []
    if run.pinned:
        diagnostics.append("minimizer pinned to the boundary of the ball; a hypothesis or the range of lambda likely fails")
        logger.warning(f"Ball minimiser of {spec.name} is pinned to the sphere")
    if not run.energy < 0:
        diagnostics.append("ball minimum energy is not negative")
    if not run.converged:
        diagnostics.append(f"ball minimisation did not converge within {opts.max_iters} iterations")
        logger.warning(f"Ball minimisation did not converge on {spec.name}")

    norm = functional.w_norm(run.x)
    checks = [
        BoundCheck("ball minimum energy < 0", run.energy, 0.0, run.energy < 0),
        BoundCheck("W-norm <= rho", norm, rho, norm <= rho * (1.0 + 1e-12)),
    ]
    return _build_report(
        spec,
        run.x,
        SolveMode.BALL,
        sum(r.iterations for r in runs),
        run.converged,
        opts,
        checks,
        diagnostics,
    )


# ─── Classification ───────────────────────────────────────────────────────


def classify(
    spec: ProblemSpec, state: State, triv_tol: float = 1e-8
) -> Tuple[Classification, List[BoundCheck]]:
    """
    Classify a state by which channels vanish and check the semi-trivial bounds.

    A channel is zero when its W-norm is at most triv_tol. For (u, 0) and
    (0, v) both bound variants are checked; a variant whose data is missing
    or whose denominator is not positive is reported as not applicable.
    """
    nu, nv = Functional(spec).channel_norms(state.to_vector())
    u_zero, v_zero = nu <= triv_tol, nv <= triv_tol
    if u_zero and v_zero:
        return Classification.TRIVIAL, []
    if not u_zero and not v_zero:
        return Classification.NONTRIVIAL, []

    classification = Classification.SEMI_TRIVIAL_U if v_zero else Classification.SEMI_TRIVIAL_V
    channel = "u" if v_zero else "v"
    sup = float(np.max(np.abs(state.u.values if v_zero else state.v.values)))
    checks = []
    for variant in ("F1", "F1'"):
        name = f"||{channel}||_inf bound ({variant})"
        try:
            bounds = semitrivial_bounds(spec, spec.hypothesis, variant)
        except ParameterError:
            checks.append(BoundCheck(name, sup, float("nan"), None))
            continue
        rhs = bounds.u_bound if v_zero else bounds.v_bound
        checks.append(BoundCheck(name, sup, rhs, sup <= rhs + 1e-12))
    return classification, checks
