"""Fixed-step classical Runge-Kutta on an arbitrary increasing grid."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class OdeSolution:
    """Success probability sampled on ``times``.

    ``max_residual`` is solver specific: distance to an analytic trajectory
    where one exists, otherwise a step-halving error estimate.
    """

    times: np.ndarray
    pc: np.ndarray
    solver_steps: int
    max_residual: float

    @property
    def terminal(self) -> float:
        return float(self.pc[-1])


def rk4(rhs, y0, grid: np.ndarray) -> np.ndarray:
    """Integrate ``dy/dx = rhs(x, y)`` over ``grid``; ``y`` may be an array.

    Returns the states stacked along a new leading axis (one per grid point).
    """
    y = np.asarray(y0, dtype=float)
    out = np.empty((len(grid),) + y.shape)
    out[0] = y
    for i in range(len(grid) - 1):
        x, h = grid[i], grid[i + 1] - grid[i]
        k1 = rhs(x, y)
        k2 = rhs(x + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(x + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(x + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[i + 1] = y
    return out
