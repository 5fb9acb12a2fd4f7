"""Conventional Dolinar receiver for ``|+alpha>`` vs ``|-alpha>`` with known alpha.

Time is normalised so the pulse lasts ``t in [0, 1]`` and carries ``|alpha|^2``
photons on average.

Near ``t = 0`` with flat priors the optimal displacement diverges and the
success probability grows like ``1/2 + sqrt(|alpha|^2 t)``. The ODE is
therefore integrated in ``s = sqrt(t)``, where that trajectory is smooth.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy.integrate import quad
from scipy.special import i1e

from ._ode import OdeSolution, rk4
from .bounds import QuadratureWarning
from .optics import amplitude

BOOTSTRAP_T0 = 1e-6
EANDE_TOL = 1e-8


@dataclass(frozen=True)
class DolinarRates:
    """Photodetection rates: ``lambda_t`` while the running guess is right,
    ``mu_t`` while it is wrong."""

    lambda_t: np.ndarray | float
    mu_t: np.ndarray | float


def dolinar_success(p_plus: float, p_minus: float, alpha_abs_sq: float, t: float = 1.0) -> float:
    """Success probability of the optimally controlled receiver at time ``t``."""
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    return 0.5 * (1.0 + math.sqrt(max(0.0, 1.0 - 4.0 * p_plus * p_minus * math.exp(-4.0 * alpha_abs_sq * t))))


def optimal_displacement(pc, alpha):
    """Displacement applied while the running guess is ``+``; ``-`` uses its negative."""
    return amplitude(alpha) / (2.0 * np.asarray(pc) - 1.0)


def dolinar_rates(alpha, gamma_plus) -> DolinarRates:
    a = amplitude(alpha)
    g = np.asarray(gamma_plus)
    return DolinarRates(np.abs(a - g) ** 2, np.abs(a + g) ** 2)


def _optimal_rhs(alpha_abs_sq: float):
    def rhs(s, pc):
        y = 1.0 - 2.0 * pc
        return 2.0 * s * alpha_abs_sq * (y - 1.0 / y)

    return rhs


def dolinar_ode_solve(
    p_plus: float,
    alpha_abs_sq: float,
    grid_steps: int = 10_000,
    *,
    t0: float = BOOTSTRAP_T0,
) -> OdeSolution:
    """Integrate the optimally controlled success-probability ODE with RK4.

    For flat priors the right-hand side is singular at ``P_c = 1/2``, so the
    trajectory is started from its analytic value at ``t0``.
    """
    if grid_steps < 100:
        raise ValueError("grid_steps must be >= 100")
    p_minus = 1.0 - p_plus
    start = max(p_plus, p_minus)
    if alpha_abs_sq == 0.0:
        times = np.linspace(0.0, 1.0, grid_steps + 1)
        return OdeSolution(times, np.full_like(times, start), grid_steps, 0.0)

    if p_plus == 0.5:
        s = np.linspace(math.sqrt(t0), 1.0, grid_steps + 1)
        pc0 = dolinar_success(p_plus, p_minus, alpha_abs_sq, t0)
    else:
        s = np.linspace(0.0, 1.0, grid_steps + 1)
        pc0 = start
    pc = rk4(_optimal_rhs(alpha_abs_sq), pc0, s)
    times = s * s
    if p_plus == 0.5:
        times = np.concatenate([[0.0], times])
        pc = np.concatenate([[0.5], pc])
    if np.any(pc[1:] <= 0.5):
        raise FloatingPointError("trajectory reached the singular point P_c = 1/2")
    exact = np.array([dolinar_success(p_plus, p_minus, alpha_abs_sq, t) for t in times])
    return OdeSolution(times, pc, grid_steps, float(np.max(np.abs(pc - exact))))


def miscalibrated_success(beta, alpha, *, paper_literal: bool = False) -> float:
    """Success probability when the receiver is tuned for ``beta`` but the
    signal is ``alpha``.

    The normalising square root involves ``|beta|^2``: it comes from the
    control built for ``beta``. ``paper_literal=True`` puts ``|alpha|^2`` there
    instead; that variant can exceed the Helstrom value.

    At ``beta = 0`` the value depends on the direction of approach; the
    angular average 1/2 is returned.
    """
    a, b = amplitude(alpha), amplitude(beta)
    a2, b2 = abs(a) ** 2, abs(b) ** 2
    if paper_literal:
        if a2 == 0.0:
            raise ValueError("alpha must be non-zero")
        norm_sq = a2
    else:
        if b2 == 0.0:
            return 0.5
        norm_sq = b2
    gain = (a * b.conjugate()).real
    return 0.5 + gain * -math.expm1(-2.0 * (a2 + b2)) / ((a2 + b2) * math.sqrt(-math.expm1(-4.0 * norm_sq)))


def miscalibrated_success_numeric(beta, alpha, grid_steps: int = 4000) -> float:
    """Same quantity as :func:`miscalibrated_success`, by propagating the
    linear rate equation under the control designed for ``beta``.

    Integrated in ``s = sqrt(t)`` from ``s = 1e-9`` with ``P_c = 1/2``; the
    start-up error decays like ``sqrt(t0)`` and is negligible.
    """
    a, b = amplitude(alpha), amplitude(beta)
    a2, b2 = abs(a) ** 2, abs(b) ** 2
    if b2 == 0.0:
        return 0.5
    gain = (a * b.conjugate()).real

    def rhs(s, x):
        c = 1.0 / math.sqrt(-math.expm1(-4.0 * b2 * s * s))
        return 2.0 * s * (2.0 * gain * c - 2.0 * (a2 + b2 * c * c) * x)

    s = np.linspace(1e-9, 1.0, grid_steps + 1)
    return 0.5 + float(rk4(rhs, 0.0, s)[-1])


def _eande_gauss_hermite(alpha: complex, n: int, points: int) -> float:
    x, w = hermgauss(points)
    u, v = np.meshgrid(x, x, indexing="ij")
    weights = np.outer(w, w) / math.pi
    beta = alpha + (u + 1j * v) / math.sqrt(n)
    a2 = abs(alpha) ** 2
    b2 = np.abs(beta) ** 2
    gain = (alpha * np.conj(beta)).real
    with np.errstate(divide="ignore", invalid="ignore"):
        excess = gain * -np.expm1(-2.0 * (a2 + b2)) / ((a2 + b2) * np.sqrt(-np.expm1(-4.0 * b2)))
    excess = np.where(b2 == 0.0, 0.0, excess)
    return 0.5 + float(np.sum(weights * excess))


def eande_success(alpha, n: int, *, method: str = "radial", quad_points: int = 64) -> float:
    """Estimate-and-discriminate: heterodyne all ``n`` copies, then run a
    Dolinar receiver tuned to the estimate.

    ``method="radial"`` (default) integrates over the estimate in polar
    coordinates. ``method="hermite"`` uses a tensor Gauss-Hermite rule centred on
    ``alpha``; the integrand has a direction-dependent limit at the origin, so
    that rule converges slowly for small ``n`` and warns when doubling
    ``quad_points`` moves the result by more than 1e-8.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    a = amplitude(alpha)
    if method == "radial":
        return eande_success_radial(a, n)
    if method != "hermite":
        raise ValueError("method must be 'radial' or 'hermite'")
    value = _eande_gauss_hermite(a, n, quad_points)
    check = _eande_gauss_hermite(a, n, 2 * quad_points)
    if abs(check - value) > EANDE_TOL:
        warnings.warn(
            f"E&D quadrature with {quad_points} points moved by {abs(check - value):.3g} on doubling",
            QuadratureWarning,
            stacklevel=2,
        )
    return value


def eande_success_radial(alpha, n: int) -> float:
    """Polar-coordinate evaluation of :func:`eande_success`.

    The angular integral is done analytically, leaving a Bessel ``I1`` kernel
    in the estimate's magnitude.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    a = abs(amplitude(alpha))
    if a == 0.0:
        return 0.5
    a2 = a * a

    def integrand(r):
        if r == 0.0:
            return 0.0
        r2 = r * r
        kernel = 2.0 * n * r * math.exp(-n * (r - a) ** 2) * i1e(2.0 * n * r * a)
        return kernel * r * a * -math.expm1(-2.0 * (a2 + r2)) / ((a2 + r2) * math.sqrt(-math.expm1(-4.0 * r2)))

    hi = a + 12.0 / math.sqrt(n)
    lo = max(0.0, a - 12.0 / math.sqrt(n))
    val, _ = quad(integrand, lo, hi, epsabs=1e-13, epsrel=1e-12, limit=400, points=[a])
    return 0.5 + val
