"""
Exception hierarchy for graphpq.

Every error raised by the library derives from GraphPQError so that the
command-line front end can map failures to exit codes in one place.
Hypothesis audits never raise for a violated condition; they report it.
"""

from typing import TYPE_CHECKING, FrozenSet, Optional

if TYPE_CHECKING:
    from src.core.graph import ValidationReport


class GraphPQError(Exception):
    """Base class for all graphpq errors."""


class GraphFormatError(GraphPQError):
    """A graph description could not be parsed into vertices and edges."""


class InputFileError(GraphPQError):
    """An input file is missing, unreadable, or not valid JSON/CSV."""

    def __init__(self, path: object, reason: str) -> None:
        self.path = path
        super().__init__(f"cannot read {path}: {reason}")


class GraphValidationError(GraphPQError):
    """A graph violates one of the standing assumptions (weights, measure, connectivity)."""

    def __init__(self, report: "ValidationReport") -> None:
        self.report = report
        super().__init__("invalid graph: " + "; ".join(report.violations))


class UnknownVertexError(GraphPQError, KeyError):
    """A vertex id does not belong to the graph."""

    def __init__(self, vertex: object) -> None:
        self.vertex = vertex
        super().__init__(f"unknown vertex {vertex!r}")

    def __str__(self) -> str:
        return self.args[0]


class NonFiniteValueError(GraphPQError, ValueError):
    """A vertex function or nonlinearity evaluation produced NaN or infinity."""

    def __init__(self, what: str, vertex: Optional[str] = None) -> None:
        self.vertex = vertex
        where = f" at vertex {vertex!r}" if vertex is not None else ""
        super().__init__(f"non-finite {what}{where}")


class ProblemConfigError(GraphPQError):
    """A problem configuration violates a standing hypothesis; the message names it."""


class ParameterError(GraphPQError, ValueError):
    """A closed-form constant is undefined or its arguments are out of range."""


class ExpressionParseError(GraphPQError):
    """An expression for the nonlinearity could not be parsed."""

    def __init__(self, text: str, position: int, expected: FrozenSet[str], detail: str = "") -> None:
        self.text = text
        self.position = position
        self.expected = expected
        choices = ", ".join(sorted(expected)) if expected else "nothing"
        message = f"parse error at position {position} in {text!r}: expected one of {choices}"
        if detail:
            message += f" ({detail})"
        super().__init__(message)


class SolverPreconditionError(GraphPQError):
    """A solver was started outside the situation it is built for."""


class EndpointNotFoundError(GraphPQError):
    """No negative-energy endpoint was found along the spike ray."""
