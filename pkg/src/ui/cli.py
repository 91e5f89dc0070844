"""
Command-line front end for graphpq.

Subcommands:
- check: validate the graph (and problem) and run the calculus invariant suite
- params: print the closed-form constants of a problem
- audit: run the hypothesis audit
- solve: run one of the three critical-point searches
- verify: recompute residuals for a stored solution
- grad-check: compare the derivative with finite differences

Exit codes: 0 success, 1 validation failure or failed check, 2 solver
nonconvergence, 3 unreadable or unparsable input. Results go to stdout
(or --out); diagnostics go to stderr.
"""

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from src.core.audit import AuditGrid, audit_conditions
from src.core.calculus import calculus_invariants
from src.core.exceptions import (
    EndpointNotFoundError,
    ExpressionParseError,
    GraphFormatError,
    GraphPQError,
    GraphValidationError,
    InputFileError,
    NonFiniteValueError,
    ParameterError,
    ProblemConfigError,
    SolverPreconditionError,
    UnknownVertexError,
)
from src.core.functional import State, energy, fd_check, residual
from src.core.graph import WeightedGraph, validate
from src.core.params import (
    ball_constants,
    coercivity_constants,
    epsilon0_param,
    lambda0_params,
    palais_smale_constants,
    rho_alpha,
    spike_constants,
)
from src.core.problem import ProblemSpec, load_problem
from src.core.solver import (
    SolveOptions,
    classify,
    find_endpoint,
    minimize_global,
    minimize_in_ball,
    mountain_pass,
)
from src.services.config_service import ConfigService
from src.services.io_service import (
    load_graph,
    load_solution,
    write_json,
    write_report,
    write_solution_csv,
)
from src.services.logging_service import get_logger, setup_logging

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_NONCONVERGED = 2
EXIT_BAD_INPUT = 3

MODES = ("sub", "super-mp", "super-ball")

# Errors reported as a failed validation rather than bad input
_VALIDATION_ERRORS = (
    GraphValidationError,
    ProblemConfigError,
    ParameterError,
    SolverPreconditionError,
    EndpointNotFoundError,
    UnknownVertexError,
    NonFiniteValueError,
)
_INPUT_ERRORS = (GraphFormatError, ExpressionParseError, InputFileError)


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subparser per command."""
    parser = argparse.ArgumentParser(
        prog="graphpq",
        description="Quasilinear (p,q)-Laplacian systems on weighted graphs",
    )
    parser.add_argument("--config", type=Path, help="tool configuration file (JSON)")
    parser.add_argument("--verbose", action="store_true", help="debug logging on stderr")
    parser.add_argument("--log-file", action="store_true", help="also log to ~/.local/share/graphpq/logs")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--graph", type=Path, help="graph file (JSON); overrides the problem's graph")
    common.add_argument("--problem", type=Path, help="problem configuration (JSON)")
    common.add_argument("--out", type=Path, help="write the JSON result here instead of stdout")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--tol", type=float, help="tolerance (residual or finite-difference error)")
    common.add_argument("--lambda", dest="lam", type=float, help="set lambda1 = lambda2")
    common.add_argument("--lambda-fraction", type=float, help="set lambda1 = lambda2 = fraction * lambda0")
    common.add_argument("--l0", type=float, help="radius l0 (defaults to the hypothesis data)")

    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("check", parents=[common], help="validate and run the calculus invariant suite")
    commands.add_parser("params", parents=[common], help="print closed-form constants")
    commands.add_parser("audit", parents=[common], help="audit the hypotheses")
    solve = commands.add_parser("solve", parents=[common], help="search for a critical point")
    solve.add_argument("--mode", choices=MODES, required=True)
    solve.add_argument("--csv", type=Path, help="solution CSV path (default: --out with .csv suffix)")
    verify = commands.add_parser("verify", parents=[common], help="recompute residuals of a stored solution")
    verify.add_argument("--solution", type=Path, required=True, help="solve report (JSON) or solution CSV")
    grad = commands.add_parser("grad-check", parents=[common], help="finite-difference derivative check")
    grad.add_argument("--solution", type=Path, help="state to check at (default: random state)")
    grad.add_argument("--directions", type=int, default=50)
    return parser


class GraphPQCli:
    """
    Runs one parsed command.

    Holds the configuration service and dispatches to the library; it
    contains no numerics of its own.
    """

    def __init__(self, args: argparse.Namespace, config: Optional[ConfigService] = None) -> None:
        self._args = args
        self._config = config or ConfigService(args.config)
        self._logger = get_logger(__name__)

    # ─── Loading ──────────────────────────────────────────────────────────

    def _graph(self) -> Optional[WeightedGraph]:
        return load_graph(self._args.graph) if self._args.graph else None

    def _problem(self) -> ProblemSpec:
        if self._args.problem is None:
            raise ProblemConfigError("this command needs --problem")
        spec = load_problem(self._args.problem, graph=self._graph())
        if self._args.lam is not None:
            spec = spec.with_lambda(self._args.lam)
        elif self._args.lambda_fraction is not None:
            spec = spec.with_lambda(self._args.lambda_fraction * lambda0_params(spec, self._l0(spec)).lambda0)
        return spec

    def _l0(self, spec: ProblemSpec) -> float:
        l0 = self._args.l0 if self._args.l0 is not None else spec.hypothesis.l0
        if l0 is None:
            raise ParameterError("l0 is needed: pass --l0 or provide it in the hypothesis data")
        return l0

    def _options(self) -> SolveOptions:
        return SolveOptions.from_config(self._config, seed=self._args.seed, grad_tol=self._args.tol)

    def _emit(self, data: Dict[str, Any]) -> None:
        if self._args.out:
            write_json(self._args.out, data)
            self._logger.info(f"Result written to {self._args.out}")
        else:
            print(json.dumps(data, indent=2))

    def _emit_report(self, report: Any) -> None:
        if self._args.out:
            write_report(self._args.out, report)
            self._logger.info(f"Report written to {self._args.out}")
        else:
            print(json.dumps(report.to_dict(), indent=2))

    # ─── Commands ─────────────────────────────────────────────────────────

    def check(self) -> int:
        spec = self._problem() if self._args.problem else None
        graph = spec.graph if spec else self._graph()
        if graph is None:
            raise ProblemConfigError("check needs --graph or --problem")
        report = validate(graph)
        result: Dict[str, Any] = {"graph": {"valid": report.is_valid, "violations": report.violations}}
        if not report.is_valid:
            self._emit(result)
            return EXIT_FAILED
        result["graph"]["mu0"] = report.mu0
        checks = calculus_invariants(
            graph, h=spec.h1 if spec else None, seed=self._args.seed or 0
        )
        result["invariants"] = [
            {"name": c.name, "worst": c.worst, "tolerance": c.tolerance, "holds": c.holds} for c in checks
        ]
        if spec:
            result["problem"] = {"name": spec.name, "p": spec.p, "q": spec.q, "h0": spec.h0, "mu0": spec.mu0}
        self._emit(result)
        return EXIT_OK if all(c.holds for c in checks) else EXIT_FAILED

    def params(self) -> int:
        spec = self._problem()
        hp = spec.hypothesis
        result: Dict[str, Any] = {"lambda1": spec.lambda1, "lambda2": spec.lambda2, "h0": spec.h0, "mu0": spec.mu0}
        l0 = self._args.l0 if self._args.l0 is not None else hp.l0

        def attempt(label: str, compute: Callable[[], Dict[str, Any]]) -> None:
            try:
                result.update(compute())
            except ParameterError as e:
                result.setdefault("unavailable", {})[label] = str(e)

        if l0 is not None:
            result["l0"] = l0
            attempt("lambda0", lambda: asdict(lambda0_params(spec, l0)))
            attempt("rho", lambda: asdict(rho_alpha(spec, l0, spec.lambda1)))
            if spec.single_equation:
                attempt("epsilon0", lambda: {"epsilon0": epsilon0_param(spec, l0)})
        x3 = hp.x3 or spec.anchors.get("x1")
        if x3 is not None:
            attempt("spike", lambda: asdict(spike_constants(spec, x3)))
        if hp.M is not None:
            result["M"] = hp.M
        x4 = hp.x4 or x3
        if x4 is not None and "rho" in result:
            attempt("ball", lambda: asdict(ball_constants(spec, x4, result["rho"])))
        attempt("coercivity", lambda: {"coercivity": asdict(coercivity_constants(spec, hp))})
        attempt("palais_smale", lambda: {"palais_smale": asdict(palais_smale_constants(spec, hp))})
        self._emit(result)
        return EXIT_OK

    def audit(self) -> int:
        spec = self._problem()
        grid = AuditGrid.from_config(self._config)
        if self._args.seed is not None:
            grid = AuditGrid(grid.span, grid.points, grid.random_points, self._args.seed)
        report = audit_conditions(spec, grid=grid)
        self._emit_report(report)
        for line in report.caveats:
            print(f"graphpq: note: {line}", file=sys.stderr)
        return EXIT_FAILED if report.violated else EXIT_OK

    def solve(self) -> int:
        spec = self._problem()
        opts = self._options()
        mode = self._args.mode
        if mode == "sub":
            report = minimize_global(spec, opts)
        else:
            barrier = rho_alpha(spec, self._l0(spec), spec.lambda1)
            if mode == "super-mp":
                endpoint = find_endpoint(spec, rho=barrier.rho)
                report = mountain_pass(spec, endpoint.state, opts, barrier=barrier)
            else:
                report = minimize_in_ball(spec, barrier.rho, opts)

        self._emit_report(report)
        csv_path = self._args.csv or (self._args.out.with_suffix(".csv") if self._args.out else None)
        if csv_path:
            write_solution_csv(csv_path, report.state, residual(spec, report.state))
        for line in report.diagnostics:
            print(f"graphpq: {line}", file=sys.stderr)
        return EXIT_OK if report.converged else EXIT_NONCONVERGED

    def verify(self) -> int:
        spec = self._problem()
        state = load_solution(self._args.solution, spec.graph)
        res = residual(spec, state)
        classification, checks = classify(spec, state, self._config.triviality_tolerance)
        tol = self._args.tol if self._args.tol is not None else self._options().grad_tol
        self._emit(
            {
                "energy": energy(spec, state),
                "residual_sup": res.sup,
                "tolerance": tol,
                "classification": classification.value,
                "bound_checks": [c.to_dict() for c in checks],
            }
        )
        return EXIT_OK if res.sup <= tol else EXIT_FAILED

    def grad_check(self) -> int:
        spec = self._problem()
        seed = self._args.seed or 0
        if self._args.solution:
            state = load_solution(self._args.solution, spec.graph)
        else:
            rng = np.random.default_rng(seed)
            state = State.from_vector(spec.graph, rng.uniform(-1.0, 1.0, 2 * spec.graph.n))
        check = fd_check(spec, state, n_directions=self._args.directions, seed=seed)
        tol = self._args.tol if self._args.tol is not None else 1e-5
        self._emit(asdict(check) | {"tolerance": tol})
        return EXIT_OK if check.max_rel_err <= tol else EXIT_FAILED

    def run(self) -> int:
        handlers = {
            "check": self.check,
            "params": self.params,
            "audit": self.audit,
            "solve": self.solve,
            "verify": self.verify,
            "grad-check": self.grad_check,
        }
        return handlers[self._args.command]()


def run(argv: Optional[List[str]] = None, config: Optional[ConfigService] = None) -> int:
    """
    Parse argv, run the command and map errors to exit codes.

    Returns:
        Process exit code.
    """
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        # argparse exits with 2 on usage errors; 2 is reserved for nonconvergence
        return EXIT_OK if e.code in (0, None) else EXIT_BAD_INPUT
    config = config or ConfigService(args.config)
    level = logging.DEBUG if args.verbose else getattr(logging, str(config.log_level).upper(), logging.INFO)
    setup_logging(level, log_to_file=args.log_file, force=True)
    logger = get_logger(__name__)
    try:
        return GraphPQCli(args, config).run()
    except _INPUT_ERRORS as e:
        print(f"graphpq: error: {e}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except _VALIDATION_ERRORS as e:
        print(f"graphpq: error: {e}", file=sys.stderr)
        return EXIT_FAILED
    except GraphPQError as e:
        logger.error(f"Unhandled graphpq error: {e}")
        print(f"graphpq: error: {e}", file=sys.stderr)
        return EXIT_FAILED
