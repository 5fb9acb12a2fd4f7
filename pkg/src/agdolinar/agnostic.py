"""Agnostic-Dolinar receiver.

The displacement of the conventional receiver is replaced by a beam splitter of
time-dependent angle ``theta(t)`` that mixes the test pulse with the
concentrated training state ``|sqrt(n) alpha>``. No phase reference is needed.
The running guess flips on every click, and with ``xi = P_c - 1/2``::

    dxi/dt = |alpha|^2 [ sqrt(n) sin 2theta + (n-1) xi cos 2theta - (n+1) xi ]

Maximising over ``theta`` at each instant gives ``2 theta* = atan2(sqrt(n), (n-1) xi)``
and the autonomous equation ``dxi/dt = |alpha|^2 (sqrt((n-1)^2 xi^2 + n) - (n+1) xi)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from ._ode import OdeSolution, rk4
from .dolinar import DolinarRates

IMPLICIT_TOL = 1e-10


@dataclass(frozen=True)
class AgnosticConfig:
    """``n_train`` copies feed the beam splitter; the control is computed for
    ``alpha_abs_sq_control`` (defaults to the true value)."""

    n_train: int
    alpha_abs_sq_true: float
    alpha_abs_sq_control: float | None = None

    def __post_init__(self):
        if self.n_train < 0:
            raise ValueError("n_train must be >= 0")
        if self.alpha_abs_sq_control is None:
            object.__setattr__(self, "alpha_abs_sq_control", self.alpha_abs_sq_true)
        for v in (self.alpha_abs_sq_true, self.alpha_abs_sq_control):
            if not (math.isfinite(v) and v >= 0):
                raise ValueError("amplitude squares must be finite and >= 0")

    @property
    def calibrated(self) -> bool:
        return self.alpha_abs_sq_control == self.alpha_abs_sq_true


@dataclass(frozen=True)
class ControlTrajectory:
    """Beam-splitter angle sampled on ``times``."""

    times: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        t, th = np.asarray(self.times, float), np.asarray(self.theta, float)
        if t.shape != th.shape or t.ndim != 1:
            raise ValueError("times and theta must be 1-d arrays of equal length")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        if np.any(th < 0) or np.any(th > math.pi / 2 + 1e-12):
            raise ValueError("theta must lie in [0, pi/2]")
        if len(th) > 1 and np.max(np.abs(np.diff(th))) > math.pi / 4:
            raise ValueError("theta jumps by more than pi/4 between samples")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "theta", th)

    @classmethod
    def constant(cls, theta: float, samples: int = 2) -> "ControlTrajectory":
        return cls(np.linspace(0.0, 1.0, samples), np.full(samples, theta))

    def at(self, t):
        return np.interp(t, self.times, self.theta)


def agnostic_rates(theta, alpha_abs_sq: float, n_train: int) -> DolinarRates:
    """Click rates behind the beam splitter: ``lambda_t`` while the guess is
    right, ``mu_t`` while it is wrong."""
    c, s = np.cos(theta), math.sqrt(n_train) * np.sin(theta)
    return DolinarRates(alpha_abs_sq * (c - s) ** 2, alpha_abs_sq * (c + s) ** 2)


def optimal_control(xi, n_train: int):
    """Beam-splitter angle that maximises the instantaneous gain in ``P_c``.

    Continuous in ``xi``; equals pi/4 at ``xi = 0`` and for ``n_train = 1``.
    With no training light every angle is equivalent and 0 is returned.
    """
    if n_train == 0:
        return np.zeros_like(np.asarray(xi, dtype=float)) if np.ndim(xi) else 0.0
    out = 0.5 * np.arctan2(math.sqrt(n_train), (n_train - 1) * np.asarray(xi, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def xi_rate(xi, alpha_abs_sq, n_train: int):
    """Right-hand side of the optimally controlled equation for ``xi``."""
    n = n_train
    return alpha_abs_sq * (np.sqrt((n - 1) ** 2 * xi * xi + n) - (n + 1) * xi)


def time_grid(steps: int) -> np.ndarray:
    """Mesh ``t_i = (i / steps)^2``.

    For large ``n_train`` the optimal ``xi`` rises through a layer of width
    ~``1/(n |alpha|^2)`` at ``t = 0`` and then grows like ``sqrt(t)``; the
    quadratic grading resolves both without extra steps.
    """
    return np.linspace(0.0, 1.0, steps + 1) ** 2


def stage_times(steps: int) -> np.ndarray:
    """``time_grid(steps)`` interleaved with its interval midpoints (the RK4 stage times)."""
    grid = time_grid(steps)
    out = np.empty(2 * steps + 1)
    out[0::2] = grid
    out[1::2] = 0.5 * (grid[:-1] + grid[1:])
    return out


def _solve_xi(alpha_abs_sq, n_train: int, grid: np.ndarray) -> np.ndarray:
    """``xi`` on ``grid``; ``alpha_abs_sq`` may be an array."""
    a = np.asarray(alpha_abs_sq, dtype=float)
    return rk4(lambda t, x: xi_rate(x, a, n_train), np.zeros_like(a), grid)


def implicit_solution_residual(
    xi: float, t: float, alpha_abs_sq: float, n_train: int, *, paper_literal: bool = False
) -> float:
    """``|alpha|^2 t - F(xi)`` where ``F`` is the closed-form time needed to
    reach ``xi`` (scaled by ``|alpha|^2``). Zero exactly on the optimal trajectory
    and strictly decreasing in ``xi``.

    ``paper_literal=True`` evaluates the uncorrected variant, with ``|alpha|^2 t / 2`` on
    the left and ``n^2 + 2`` in the double-angle term; it does not vanish on the
    trajectory and is kept only for comparison.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    if xi < 0.0 or 1.0 - 4.0 * xi * xi < 1e-300:
        raise ValueError("xi must lie in [0, 1/2)")
    n = n_train
    if n < 1:
        raise ValueError("n_train must be >= 1")
    root_q = math.sqrt((n - 1) ** 2 * xi * xi + n)
    first = -(n - 1) / (4 * n) * math.atanh((n - 1) * xi / root_q)
    if paper_literal:
        arg = 2 * xi * (n + 1) * root_q / (2 * (n * n + 2) * xi * xi + n)
        rhs = first + (n + 1) / (8 * n) * (math.atanh(arg) - math.log(1 - 4 * xi * xi))
        return 0.5 * alpha_abs_sq * t - rhs
    # 2 atanh(y) - log(1 - 4 xi^2) with y = (n+1) xi / sqrt(Q); 1 - y is expanded
    # analytically because it underflows as xi -> 1/2
    y = (n + 1) * xi / root_q
    doubled = (
        math.log1p(y)
        + math.log1p(((n - 1) ** 2 * xi * xi + (n + 1) * xi * root_q) / n)
        - 2.0 * math.log1p(-4.0 * xi * xi)
    )
    return alpha_abs_sq * t - (first + (n + 1) / (8 * n) * doubled)


def invert_implicit(t: float, alpha_abs_sq: float, n_train: int) -> float:
    """``xi(t)`` on the optimal trajectory, by bisection on the implicit relation."""
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    if t == 0.0 or alpha_abs_sq == 0.0:
        return 0.0

    def f(x):
        return implicit_solution_residual(x, t, alpha_abs_sq, n_train)

    if f(0.0) <= 0.0:
        return 0.0  # t so small that |alpha|^2 t underflows against F(0) = 0
    hi = math.nextafter(0.5, 0.0)
    if f(hi) > 0:
        raise ValueError("root not bracketed: xi(t) is closer to 1/2 than double precision resolves")
    root = bisect(f, 0.0, hi, xtol=1e-17, rtol=4 * np.finfo(float).eps, maxiter=200)
    if abs(f(root)) > IMPLICIT_TOL:
        raise ArithmeticError(f"bisection stalled with residual {f(root):.3g}")
    return root


def agnostic_ode_solve(cfg: AgnosticConfig, grid_steps: int = 1000) -> OdeSolution:
    """Optimal success probability of the calibrated receiver on :func:`time_grid`.

    ``max_residual`` is the largest implicit-relation residual along the path.
    """
    if grid_steps < 100:
        raise ValueError("grid_steps must be >= 100")
    if not cfg.calibrated:
        raise ValueError("use propagate_with_control for a miscalibrated control")
    times = time_grid(grid_steps)
    if cfg.n_train == 0 or cfg.alpha_abs_sq_true == 0.0:
        return OdeSolution(times, np.full_like(times, 0.5), grid_steps, 0.0)
    xi = _solve_xi(cfg.alpha_abs_sq_true, cfg.n_train, times)
    res = max(
        abs(implicit_solution_residual(x, t, cfg.alpha_abs_sq_true, cfg.n_train))
        for x, t in zip(xi, times)
    )
    return OdeSolution(times, 0.5 + xi, grid_steps, float(res))


def optimal_trajectory(alpha_abs_sq: float, n_train: int, grid_steps: int = 1000) -> ControlTrajectory:
    """Optimal angle for an assumed ``alpha_abs_sq``, sampled at every RK4
    stage time of a ``grid_steps`` integration (``2 * grid_steps + 1`` points)."""
    times = stage_times(grid_steps)
    if n_train == 0:
        return ControlTrajectory(times, np.zeros_like(times))
    xi = _solve_xi(alpha_abs_sq, n_train, times)
    return ControlTrajectory(times, optimal_control(xi, n_train))


def _propagate(
    alpha_abs_sq_true, theta: np.ndarray, n_train: int, grid: np.ndarray, *, history: bool = True
) -> np.ndarray:
    """RK4 for ``xi`` under sampled controls.

    ``theta`` has shape ``(2N + 1, ...)`` holding the angle at the nodes and
    midpoints of ``grid`` (N steps); its trailing shape broadcasts against
    ``alpha_abs_sq_true``. Returns ``xi`` at the grid nodes, or only at the
    final node when ``history`` is false.
    """
    steps = len(grid) - 1
    a = np.asarray(alpha_abs_sq_true, dtype=float)
    drive = math.sqrt(n_train) * np.sin(2.0 * theta)
    decay = (n_train + 1) - (n_train - 1) * np.cos(2.0 * theta)

    def rate(j, x):
        return a * (drive[j] - decay[j] * x)

    x = np.zeros(np.broadcast_shapes(a.shape, theta.shape[1:]))
    out = np.empty((steps + 1,) + x.shape) if history else None
    if history:
        out[0] = x
    for i in range(steps):
        j = 2 * i
        h = grid[i + 1] - grid[i]
        k1 = rate(j, x)
        k2 = rate(j + 1, x + 0.5 * h * k1)
        k3 = rate(j + 1, x + 0.5 * h * k2)
        k4 = rate(j + 2, x + h * k3)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if history:
            out[i + 1] = x
    return out if history else x


def propagate_with_control(
    cfg: AgnosticConfig, control: ControlTrajectory, grid_steps: int = 1000
) -> OdeSolution:
    """Success probability at the true amplitude under a given angle schedule.

    The control is read at the RK4 stage times by linear interpolation, which is
    exact for trajectories from :func:`optimal_trajectory` with the same
    ``grid_steps``. ``max_residual`` is the terminal change when the run is
    repeated with half the steps (control re-interpolated), an upper estimate
    of the error.
    """
    if grid_steps < 100:
        raise ValueError("grid_steps must be >= 100")
    fine = stage_times(grid_steps)
    xi = _propagate(cfg.alpha_abs_sq_true, control.at(fine), cfg.n_train, fine[0::2])
    half = stage_times(grid_steps // 2)
    coarse = _propagate(cfg.alpha_abs_sq_true, control.at(half), cfg.n_train, half[0::2])
    return OdeSolution(fine[0::2], 0.5 + xi, grid_steps, float(abs(xi[-1] - coarse[-1])))


def terminal_success(alpha_abs_sq_true, alpha_abs_sq_control, n_train: int, grid_steps: int = 1000) -> np.ndarray:
    """``P_c(1)`` for every (control, truth) pair.

    Returns shape ``(len(control), len(true))``. The receiver is calibrated
    when a control value equals the true value.
    """
    ctrl = np.atleast_1d(np.asarray(alpha_abs_sq_control, dtype=float))
    true = np.atleast_1d(np.asarray(alpha_abs_sq_true, dtype=float))
    if n_train == 0:
        return np.full((ctrl.size, true.size), 0.5)
    # keep the control equation resolved for large assumed amplitudes
    steps = max(grid_steps, int(math.ceil(4.0 * float(ctrl.max(initial=0.0)))))
    stages = stage_times(steps)
    xi_ctrl = _solve_xi(ctrl, n_train, stages)
    theta = optimal_control(xi_ctrl, n_train)[:, :, None]
    return 0.5 + _propagate(true[None, :], theta, n_train, stages[0::2], history=False)
