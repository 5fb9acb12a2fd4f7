"""Estimate ``|alpha|^2`` on part of the training set, classify with the rest.

``m`` of the ``n`` training copies are concentrated into ``|sqrt(m) alpha>`` and
measured once, by photon counting (outcome ``k``, estimate ``k/m``) or by
heterodyne (outcome ``s = |beta|^2``, estimate ``s/m``). The other ``n - m``
copies drive an agnostic-Dolinar receiver whose control is computed for the
estimate. Every average below is vectorised over the true amplitude, so a whole
sweep costs one batched propagation.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import BarycentricInterpolator
from scipy.special import gammaln, pdtr, xlogy

from .agnostic import terminal_success
from .bounds import QuadratureWarning, RicePrior, poisson_logpmf
from .special import i0e

PHOTON_TAIL = 1e-12
HETERODYNE_TOL = 1e-8
PRIOR_TOL = 1e-8
CURVE_TOL = 1e-9
_MAX_CURVE_NODES = 1024
_GL_NODES = 16
_MAX_REFINE = 6


class EstimatorKind(str, enum.Enum):
    PHOTON_COUNTING = "photon"
    HETERODYNE = "heterodyne"


@dataclass(frozen=True)
class SplitConfig:
    n_total: int
    m_estimate: int

    def __post_init__(self):
        if not 0 <= self.m_estimate < self.n_total:
            raise ValueError("need 0 <= m_estimate < n_total")

    @property
    def n_receiver(self) -> int:
        return self.n_total - self.m_estimate


def photon_count_pmf(k, m: int, alpha_abs_sq: float):
    """Probability of ``k`` clicks from ``|sqrt(m) alpha>``."""
    out = np.exp(poisson_logpmf(k, m * alpha_abs_sq))
    return float(out) if np.ndim(out) == 0 else out


def heterodyne_radial_pdf(b_abs_sq, m: int, alpha_abs_sq: float):
    """Density of ``s = |beta|^2`` for heterodyne on ``|sqrt(m) alpha>``:
    ``exp(-(m|alpha|^2 + s)) I0(2 sqrt(m |alpha|^2 s))``."""
    s = np.asarray(b_abs_sq, dtype=float)
    if np.any(s < 0):
        raise ValueError("b_abs_sq must be >= 0")
    nu_sq = m * alpha_abs_sq
    out = np.exp(-((math.sqrt(nu_sq) - np.sqrt(s)) ** 2)) * i0e(2.0 * np.sqrt(nu_sq * s))
    return float(out) if np.ndim(out) == 0 else out


def _gauss_legendre_panels(lo: float, hi: float, panels: int, breaks=()):
    """Nodes and weights of a composite Gauss-Legendre rule."""
    x, w = np.polynomial.legendre.leggauss(_GL_NODES)
    edges = np.unique(np.concatenate([np.linspace(lo, hi, panels + 1), [b for b in breaks if lo < b < hi]]))
    a, b = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (b - a) * x + 0.5 * (b + a)
    weights = 0.5 * (b - a) * w
    return nodes.ravel(), weights.ravel()


def _refine(evaluate, lo: float, hi: float, tol: float, what: str, breaks=()):
    """Double the number of panels until the result moves by less than ``tol``.

    ``evaluate(nodes, weights)`` returns an array; the max-norm change is tested.
    """
    panels = 4
    prev = evaluate(*_gauss_legendre_panels(lo, hi, panels, breaks))
    for _ in range(_MAX_REFINE):
        panels *= 2
        cur = evaluate(*_gauss_legendre_panels(lo, hi, panels, breaks))
        change = float(np.max(np.abs(cur - prev)))
        if change <= tol:
            return cur
        prev = cur
    warnings.warn(f"{what} quadrature changed by {change:.3g} at the last refinement", QuadratureWarning, stacklevel=3)
    return cur


def _photon_average(a_true: np.ndarray, m: int, n_rx: int, grid_steps: int) -> np.ndarray:
    mean_max = m * float(a_true.max())
    k_max = 0
    while pdtr(k_max, mean_max) < 1.0 - PHOTON_TAIL:
        k_max += 1
    k = np.arange(k_max + 1)
    perf = terminal_success(a_true, k / m, n_rx, grid_steps)  # (k, truth)
    mean = m * a_true[None, :]
    pmf = np.exp(xlogy(k[:, None], mean) - mean - gammaln(k[:, None] + 1.0))
    covered = pmf.sum(axis=0)
    # truncated mass goes to the last computed outcome
    return (pmf * perf).sum(axis=0) + np.clip(1.0 - covered, 0.0, None) * perf[-1]


def _heterodyne_average(
    a_true: np.ndarray, m: int, n_rx: int, grid_steps: int, bias_corrected: bool
) -> np.ndarray:
    # integrate over r = |beta|, where the density is a smooth Rice bump of width ~1/sqrt(2)
    nu = np.sqrt(m * a_true)
    lo, hi = max(0.0, float(nu.min()) - 9.0), float(nu.max()) + 9.0

    def evaluate(r, w):
        s = r * r
        est = np.maximum(s - 1.0, 0.0) / m if bias_corrected else s / m
        perf = terminal_success(a_true, est, n_rx, grid_steps)  # (node, truth)
        dens = 2.0 * r[:, None] * np.exp(-((r[:, None] - nu[None, :]) ** 2)) * i0e(2.0 * r[:, None] * nu[None, :])
        return ((w[:, None] * dens) * perf).sum(axis=0)

    return _refine(evaluate, lo, hi, HETERODYNE_TOL, "heterodyne", breaks=(1.0,) if bias_corrected else ())


def split_success(
    alpha_abs_sq,
    split: SplitConfig,
    est: EstimatorKind | str,
    *,
    grid_steps: int = 1000,
    bias_corrected: bool = False,
) -> np.ndarray:
    """Mean success probability of the split strategy, vectorised over the true ``|alpha|^2``.

    ``bias_corrected`` replaces the heterodyne estimate ``s/m`` by ``max(s - 1, 0)/m``.
    With ``m_estimate = 0`` nothing is measured and the control assumes ``|alpha| = 0``.
    """
    est = EstimatorKind(est)
    a = np.atleast_1d(np.asarray(alpha_abs_sq, dtype=float))
    m, n_rx = split.m_estimate, split.n_receiver
    out = np.full(a.shape, 0.5)
    live = a > 0
    if not live.any():
        return out
    if m == 0:
        out[live] = terminal_success(a[live], [0.0], n_rx, grid_steps)[0]
    elif est is EstimatorKind.PHOTON_COUNTING:
        out[live] = _photon_average(a[live], m, n_rx, grid_steps)
    else:
        out[live] = _heterodyne_average(a[live], m, n_rx, grid_steps, bias_corrected)
    return out


def split_performance(alpha, split: SplitConfig, est: EstimatorKind | str, **kwargs) -> float:
    """Scalar form of :func:`split_success` for a complex amplitude."""
    return float(split_success(abs(complex(alpha)) ** 2, split, est, **kwargs)[0])


_KNOWN_SPLITS = {4: 2, 8: 3}


def apriori_m(n_total: int) -> int:
    """Amplitude-independent split: 4 -> 2 and 8 -> 3 from the tabulated choices, otherwise
    ``round(sqrt(n))`` clamped to ``[1, n - 1]``."""
    if n_total < 2:
        raise ValueError("n_total must be >= 2")
    if n_total in _KNOWN_SPLITS:
        return _KNOWN_SPLITS[n_total]
    return min(max(round(math.sqrt(n_total)), 1), n_total - 1)


def apriori_m_is_reported(n_total: int) -> bool:
    """Whether :func:`apriori_m` returns a reported value rather than the extrapolation rule."""
    return n_total in _KNOWN_SPLITS


@dataclass(frozen=True)
class SuccessCurve:
    """Polynomial interpolant of :func:`split_success` in ``|alpha|`` on ``[0, r_max]``.

    Built on nested Chebyshev-Lobatto nodes; ``error_estimate`` is the largest
    deviation of the previous level from exact values at the newly added nodes.
    """

    r_max: float
    nodes: np.ndarray
    values: np.ndarray
    error_estimate: float

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if np.any((r < 0) | (r > self.r_max * (1 + 1e-12))):
            raise ValueError("r outside the interpolation range")
        return BarycentricInterpolator(self.nodes, self.values)(r)


def _lobatto(r_max: float, order: int) -> np.ndarray:
    return 0.5 * r_max * (1.0 - np.cos(np.pi * np.arange(order + 1) / order))


def split_success_curve(
    split: SplitConfig,
    est: EstimatorKind | str,
    r_max: float,
    *,
    tol: float = CURVE_TOL,
    grid_steps: int = 1000,
    bias_corrected: bool = False,
) -> SuccessCurve:
    """Interpolate the split strategy's success probability over ``|alpha| in [0, r_max]``.

    The node count doubles until the interpolant predicts the new nodes to
    within ``tol``; a :class:`QuadratureWarning` is issued if that never happens.
    """
    if not r_max > 0:
        raise ValueError("r_max must be > 0")

    def exact(r):
        return split_success(r * r, split, est, grid_steps=grid_steps, bias_corrected=bias_corrected)

    order = 16
    nodes = _lobatto(r_max, order)
    values = exact(nodes)
    while True:
        fine = _lobatto(r_max, 2 * order)
        added = fine[1::2]
        fresh = exact(added)
        err = float(np.max(np.abs(BarycentricInterpolator(nodes, values)(added) - fresh)))
        merged = np.empty(2 * order + 1)
        merged[0::2], merged[1::2] = values, fresh
        nodes, values, order = fine, merged, 2 * order
        if err <= tol or order >= _MAX_CURVE_NODES:
            break
    if err > tol:
        warnings.warn(f"success curve reached only {err:.3g} (requested {tol:g})", QuadratureWarning, stacklevel=2)
    return SuccessCurve(float(r_max), nodes, values, err)


def rice_averaged_errors(
    n_total: int,
    priors: list[RicePrior],
    est: EstimatorKind | str,
    *,
    m: int | None = None,
    grid_steps: int = 1000,
) -> np.ndarray:
    """Prior-averaged error of the split strategy for several priors at once.

    The success probability is evaluated once as a :class:`SuccessCurve` over
    the union of the priors' supports, then integrated against each density.
    """
    if n_total < 2:
        raise ValueError("n_total must be >= 2")
    split = SplitConfig(n_total, apriori_m(n_total) if m is None else m)
    # map each prior's support onto [0, 1] so a single node set serves all of them
    bounds = np.array([p.support for p in priors])
    lo, width = bounds[:, 0], bounds[:, 1] - bounds[:, 0]
    curve = split_success_curve(split, est, float(bounds[:, 1].max()), grid_steps=grid_steps)

    def evaluate(u, w):
        r = lo[:, None] + width[:, None] * u[None, :]
        err = 1.0 - curve(r.ravel()).reshape(r.shape)
        dens = np.stack([p.pdf(row) for p, row in zip(priors, r)])
        return (dens * err * w[None, :]).sum(axis=1) * width

    return _refine(evaluate, 0.0, 1.0, PRIOR_TOL, "prior")


def rice_averaged_error(
    n_total: int, prior: RicePrior, est: EstimatorKind | str, *, m: int | None = None, grid_steps: int = 1000
) -> float:
    """``E_prior[1 - P_c]`` with the split ``m`` (default :func:`apriori_m`)."""
    return float(rice_averaged_errors(n_total, [prior], est, m=m, grid_steps=grid_steps)[0])
