"""
Nonlinearities F(x, s, t) with their partial derivatives.

A nonlinearity is bound to a graph and evaluated for arrays of
(vertex index, s, t) triples at once. Implementations:
- Example51Nonlinearity: (3/5)(s^(5/3) + t^(5/3)) on two vertices
- Example52Nonlinearity: M ln(1 + s^4 + t^4)(s^4 + t^4)
- ScalarNonlinearity: F(x, s, t) = F1(x, s) for single-equation problems
- ExpressionNonlinearity: user expressions for F, F_s, F_t
- ZeroNonlinearity
"""

from abc import ABC, abstractmethod
from typing import Callable, Iterable, List, Optional, Tuple

import numpy as np

from src.core.exceptions import NonFiniteValueError
from src.core.expression import Expression, signed_power
from src.core.graph import WeightedGraph

Triple = Tuple[np.ndarray, np.ndarray, np.ndarray]
ScalarFunction = Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]]


class Nonlinearity(ABC):
    """
    Base class for F(x, s, t).

    Subclasses implement _evaluate for vertex index arrays; the base class
    adds support masking and finiteness checks.
    """

    def __init__(self, graph: WeightedGraph, name: str, support: Optional[Iterable[str]] = None) -> None:
        self.graph = graph
        self.name = name
        if support is None:
            self._mask = None
        else:
            mask = np.zeros(graph.n, dtype=bool)
            for x in support:
                mask[graph.index(x)] = True
            self._mask = mask

    @property
    def support(self) -> Optional[List[str]]:
        """Vertex ids where F may be nonzero, or None for every vertex."""
        if self._mask is None:
            return None
        return [self.graph.vertices[i] for i in np.flatnonzero(self._mask)]

    @abstractmethod
    def _evaluate(self, idx: np.ndarray, s: np.ndarray, t: np.ndarray) -> Triple:
        """F, F_s, F_t at the given triples, ignoring the support."""

    def evaluate(self, idx, s, t) -> Triple:
        """F, F_s, F_t at (x, s, t) triples given by vertex index, s and t arrays."""
        idx = np.asarray(idx, dtype=np.int64)
        s, t = np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float))
        idx = np.broadcast_to(idx, s.shape)
        with np.errstate(all="ignore"):
            values = self._evaluate(idx, s, t)
        values = tuple(np.broadcast_to(np.asarray(v, float), s.shape) for v in values)
        if self._mask is None:
            return values
        inside = self._mask[idx]
        return tuple(np.where(inside, v, 0.0) for v in values)

    def at_state(self, u: np.ndarray, v: np.ndarray) -> Triple:
        """
        F, F_s, F_t at every vertex for the state (u, v).

        Raises:
            NonFiniteValueError: If any value is NaN or infinite; names the vertex.
        """
        values = self.evaluate(np.arange(self.graph.n), u, v)
        for label, array in zip(("F", "F_s", "F_t"), values):
            bad = np.flatnonzero(~np.isfinite(array))
            if bad.size:
                raise NonFiniteValueError(f"{label} evaluation", self.graph.vertices[bad[0]])
        return values

    def origin_violations(self, tol: float = 1e-12) -> List[str]:
        """Vertices where F(x, 0, 0) is not zero (or not finite)."""
        zeros = np.zeros(self.graph.n)
        F, _, _ = self.evaluate(np.arange(self.graph.n), zeros, zeros)
        bad = ~np.isfinite(F) | (np.abs(F) > tol)
        return [self.graph.vertices[i] for i in np.flatnonzero(bad)]

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name!r})"


class ZeroNonlinearity(Nonlinearity):
    """F identically zero."""

    def __init__(self, graph: WeightedGraph) -> None:
        super().__init__(graph, "zero")

    def _evaluate(self, idx, s, t):
        zero = np.zeros(s.shape)
        return zero, zero, zero


class Example51Nonlinearity(Nonlinearity):
    """(3/5)(s^(5/3) + t^(5/3)) with real odd roots, supported on two vertices."""

    def __init__(self, graph: WeightedGraph, x1: str, x2: str) -> None:
        super().__init__(graph, "example51", support=[x1, x2])

    def _evaluate(self, idx, s, t):
        F = 0.6 * (signed_power(s, 5.0 / 3.0) + signed_power(t, 5.0 / 3.0))
        Fs = np.abs(s) ** (2.0 / 3.0)
        Ft = np.abs(t) ** (2.0 / 3.0)
        return F, Fs, Ft


class Example52Nonlinearity(Nonlinearity):
    """M ln(1 + S) S with S = s^4 + t^4."""

    def __init__(self, graph: WeightedGraph, M: float, support: Optional[Iterable[str]] = None) -> None:
        super().__init__(graph, "example52", support=support)
        self.M = float(M)

    def _evaluate(self, idx, s, t):
        S = s ** 4 + t ** 4
        log_term = np.log1p(S)
        factor = self.M * (S / (1.0 + S) + log_term)
        return self.M * log_term * S, 4.0 * s ** 3 * factor, 4.0 * t ** 3 * factor


def log_cubic(M: float) -> ScalarFunction:
    """The one-variable nonlinearity M ln(1 + s^2)|s|^3 and its derivative."""

    def evaluate(idx: np.ndarray, s: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        log_term = np.log1p(s ** 2)
        F = M * log_term * np.abs(s) ** 3
        Fs = M * (2.0 * s / (1.0 + s ** 2) * np.abs(s) ** 3 + 3.0 * log_term * s * np.abs(s))
        return F, Fs

    return evaluate


class ScalarNonlinearity(Nonlinearity):
    """F(x, s, t) = F1(x, s); F_t vanishes identically."""

    def __init__(
        self,
        graph: WeightedGraph,
        function: ScalarFunction,
        name: str,
        support: Optional[Iterable[str]] = None,
    ) -> None:
        super().__init__(graph, name, support=support)
        self._function = function

    def _evaluate(self, idx, s, t):
        F, Fs = self._function(idx, s)
        return F, Fs, np.zeros(s.shape)


class ExpressionNonlinearity(Nonlinearity):
    """F, F_s, F_t given as separate expressions in s and t."""

    def __init__(
        self,
        graph: WeightedGraph,
        F: str,
        Fs: str,
        Ft: str,
        support: Optional[Iterable[str]] = None,
    ) -> None:
        super().__init__(graph, f"expr:{F}", support=support)
        self.expressions = (Expression(F), Expression(Fs), Expression(Ft))

    def _evaluate(self, idx, s, t):
        return tuple(expression(s, t) for expression in self.expressions)
