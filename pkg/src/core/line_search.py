"""
Backtracking line search with the Armijo sufficient-decrease rule.

The searcher keeps a little memory between calls to choose the first trial
step: the Barzilai-Borwein step from the previous secant pair when spectral
steps are enabled, otherwise the step that would have reproduced the last
decrease, scaled by an optimism factor. A projected variant searches along
the projection arc x(a) = P(x + a d).
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from src.core.exceptions import NonFiniteValueError

Objective = Callable[[np.ndarray], float]
Projection = Callable[[np.ndarray], np.ndarray]

# Spectral steps are clipped to this range
MIN_STEP = 1e-12
MAX_STEP = 1e12


@dataclass(frozen=True)
class LineSearchResult:
    accepted: bool
    step: float
    x: np.ndarray
    f: float


def safe_evaluate(objective: Objective, x: np.ndarray) -> float:
    """Objective value, with non-finite evaluations mapped to +inf."""
    try:
        value = objective(x)
    except NonFiniteValueError:
        return float("inf")
    return value if np.isfinite(value) else float("inf")


class BacktrackingLineSearch:
    """
    Armijo backtracking along a descent direction.

    Args:
        contraction_factor: Step multiplier after a failed trial, in (0, 1).
        sufficient_decrease: Armijo constant c in (0, 1).
        initial_step_size: First trial step when no history is available.
        optimism: Growth factor applied to the history-based first step.
        spectral: Use Barzilai-Borwein first steps from the previous iterate.
        max_iterations: Trials before the step is rejected.
    """

    def __init__(
        self,
        contraction_factor: float = 0.5,
        sufficient_decrease: float = 1e-4,
        initial_step_size: float = 1.0,
        optimism: float = 2.0,
        spectral: bool = True,
        max_iterations: int = 60,
    ) -> None:
        self.contraction_factor = contraction_factor
        self.sufficient_decrease = sufficient_decrease
        self.initial_step_size = initial_step_size
        self.optimism = optimism
        self.spectral = spectral
        self.max_iterations = max_iterations
        self.reset()

    def reset(self) -> None:
        """Forget the previous iterate."""
        self._oldf0: Optional[float] = None
        self._prev_x: Optional[np.ndarray] = None
        self._prev_g: Optional[np.ndarray] = None

    def _first_step(self, x: np.ndarray, g: np.ndarray, f0: float, df0: float) -> float:
        if self.spectral and self._prev_x is not None and self._prev_x.shape == x.shape:
            s = x - self._prev_x
            y = g - self._prev_g
            sy = float(s @ y)
            if sy > 0:
                return float(np.clip(float(s @ s) / sy, MIN_STEP, MAX_STEP))
        if self._oldf0 is not None and df0 < 0:
            alpha = self.optimism * 2.0 * (f0 - self._oldf0) / df0
            if np.isfinite(alpha) and alpha > 0:
                return float(min(alpha, MAX_STEP))
        return self.initial_step_size

    def _remember(self, x: np.ndarray, g: np.ndarray, f0: float) -> None:
        self._oldf0 = f0
        self._prev_x = x.copy()
        self._prev_g = g.copy()

    def search(
        self, objective: Objective, x: np.ndarray, f0: float, g: np.ndarray, d: np.ndarray
    ) -> LineSearchResult:
        """
        Find a step along d satisfying f(x + a d) <= f0 + c a g.d.

        Args:
            objective: Function to decrease.
            x: Current point.
            f0: objective(x).
            g: Gradient at x.
            d: Descent direction (g.d < 0).

        Returns:
            The accepted step and point, or accepted=False with x unchanged.
        """
        df0 = float(g @ d)
        if not df0 < 0:
            return LineSearchResult(False, 0.0, x, f0)
        alpha = self._first_step(x, g, f0, df0)
        self._remember(x, g, f0)

        for _ in range(self.max_iterations):
            newx = x + alpha * d
            newf = safe_evaluate(objective, newx)
            if newf <= f0 + self.sufficient_decrease * alpha * df0:
                return LineSearchResult(True, alpha, newx, newf)
            alpha *= self.contraction_factor

        return LineSearchResult(False, 0.0, x, f0)

    def projected_search(
        self,
        objective: Objective,
        project: Projection,
        x: np.ndarray,
        f0: float,
        g: np.ndarray,
        d: np.ndarray,
    ) -> LineSearchResult:
        """
        Armijo rule along the projection arc: f(P(x + a d)) <= f0 + c g.(P(x + a d) - x).
        """
        alpha = self._first_step(x, g, f0, float(g @ d))
        self._remember(x, g, f0)

        for _ in range(self.max_iterations):
            newx = project(x + alpha * d)
            decrease = float(g @ (newx - x))
            if decrease < 0:
                newf = safe_evaluate(objective, newx)
                if newf <= f0 + self.sufficient_decrease * decrease:
                    return LineSearchResult(True, alpha, newx, newf)
            alpha *= self.contraction_factor

        return LineSearchResult(False, 0.0, x, f0)
