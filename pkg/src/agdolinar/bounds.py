"""Error bounds: Helstrom, the phase-invariant optimum for finite training sets,
its large-n expansion, its average over a Rice prior, and a Fock-sector oracle.

The phase-invariant bound is a Poisson average over total photon number ``m``
of the two-pure-state trace distance inside each sector::

    P_e = 1/2 * (1 - sum_m p(m; (n+1)|alpha|^2) * sqrt(1 - r^(2m))),   r = (n-1)/(n+1)

``paper_literal=True`` inserts an extra factor 1/2 in front of the sum. That
variant does not tend to the Helstrom error as n grows and is kept only for
comparison.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad_vec
from scipy.special import gammaln, pdtrc

from .optics import amplitude, overlap_modulus_sq
from .special import i0e

POISSON_TAIL = 1e-12
POISSON_FLOOR = 1e-15
PRIOR_QUAD_TOL = 1e-10


class QuadratureWarning(RuntimeWarning):
    """An adaptive quadrature stopped before reaching its requested tolerance."""


@dataclass(frozen=True)
class PoissonWeights:
    mean_sq: float
    weights: np.ndarray = field(repr=False)
    tail_bound: float

    @property
    def m(self) -> np.ndarray:
        return np.arange(len(self.weights))


def poisson_logpmf(m, mean_sq: float) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if mean_sq == 0.0:
        return np.where(m == 0, 0.0, -np.inf)
    return m * math.log(mean_sq) - mean_sq - gammaln(m + 1)


def poisson_weights(mean_sq: float) -> PoissonWeights:
    """Truncated Poisson pmf with a certified upper-tail mass.

    Terms run until the weight drops below 1e-15 past the mode and the retained
    mass reaches 1 - 1e-12; the index is capped at ``max(50, 10 * mean_sq)``.
    """
    if mean_sq < 0 or not math.isfinite(mean_sq):
        raise ValueError("mean_sq must be finite and >= 0")
    if mean_sq == 0.0:
        return PoissonWeights(0.0, np.ones(1), 0.0)
    cap = max(50, math.ceil(10 * mean_sq))
    # far beyond any 1e-15 tail; keeps the array small for large means
    upper = min(cap, math.ceil(mean_sq + 40 * math.sqrt(mean_sq) + 60))
    w = np.exp(poisson_logpmf(np.arange(upper + 1), mean_sq))
    mass = np.cumsum(w)
    ok = (w < POISSON_FLOOR) & (mass >= 1 - POISSON_TAIL) & (np.arange(upper + 1) >= mean_sq)
    last = int(np.argmax(ok)) if ok.any() else upper
    tail = float(pdtrc(last, mean_sq))
    return PoissonWeights(float(mean_sq), w[: last + 1], tail)


def helstrom_success(p1: float, p2: float, a1, a2) -> float:
    """Optimal success probability for two known coherent states."""
    if p1 < 0 or p2 < 0 or abs(p1 + p2 - 1.0) > 1e-12:
        raise ValueError("priors must be non-negative and sum to 1")
    ov = overlap_modulus_sq(a1, a2)
    return 0.5 * (1.0 + math.sqrt(max(0.0, 1.0 - 4.0 * p1 * p2 * ov)))


def helstrom_error(alpha_abs_sq: float) -> float:
    """Helstrom error for ``|+alpha>`` vs ``|-alpha>`` with flat priors."""
    return 0.5 * (1.0 - math.sqrt(-math.expm1(-4.0 * alpha_abs_sq)))


def sector_distances(n: int, m) -> np.ndarray:
    """``sqrt(1 - <m,+|m,->^2)`` for the sector states, vectorised over ``m``."""
    m = np.asarray(m, dtype=float)
    if n == 1:
        overlap_sq = np.where(m == 0, 1.0, 0.0)
    else:
        overlap_sq = np.exp(2.0 * m * math.log((n - 1) / (n + 1)))
    return np.sqrt(1.0 - overlap_sq)


def _bound_from_distribution(weights: np.ndarray, n: int, paper_literal: bool) -> float:
    total = math.fsum(weights * sector_distances(n, np.arange(len(weights))))
    if paper_literal:
        total *= 0.5
    return 0.5 * (1.0 - total)


def mec_optimal_error(n: int, alpha_abs_sq: float, *, paper_literal: bool = False) -> float:
    """Minimum error of a phase-invariant classifier with ``n`` training copies."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if alpha_abs_sq < 0:
        raise ValueError("alpha_abs_sq must be >= 0")
    pw = poisson_weights((n + 1) * alpha_abs_sq)
    return _bound_from_distribution(pw.weights, n, paper_literal)


def mec_optimal_error_asymptotic(n: int, alpha_abs_sq: float) -> float:
    """Large-n expansion of :func:`mec_optimal_error`, accurate to O(1/n^2).

    The 1/n correction is positive: a finite training set can only do worse
    than the Helstrom error.
    """
    if n < 2:
        raise ValueError("expansion needs n >= 2")
    if alpha_abs_sq <= 0:
        raise ValueError("expansion is singular at alpha = 0")
    e = math.exp(-4.0 * alpha_abs_sq)
    one_minus = -math.expm1(-4.0 * alpha_abs_sq)
    correction = 2.0 * alpha_abs_sq * e / one_minus**1.5 / n
    return 0.5 * (1.0 - (math.sqrt(one_minus) - correction))


@dataclass(frozen=True)
class RicePrior:
    """Rice density on ``|alpha|``: magnitude of a complex Gaussian of width
    ``sigma`` centred at distance ``x_c`` from the origin."""

    sigma: float
    x_c: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be > 0")
        if self.x_c < 0:
            raise ValueError("x_c must be >= 0")

    def pdf(self, r):
        r = np.asarray(r, dtype=float)
        s2 = self.sigma**2
        out = r / s2 * np.exp(-((r - self.x_c) ** 2) / (2 * s2)) * i0e(r * self.x_c / s2)
        return out

    @property
    def support(self) -> tuple[float, float]:
        """Integration range; the density is below 1e-20 of its peak outside it."""
        return max(0.0, self.x_c - 10 * self.sigma), self.x_c + 10 * self.sigma


def averaged_photon_distribution(n: int, prior: RicePrior) -> np.ndarray:
    """Photon-number distribution of the concentrated state averaged over the prior."""
    lo, hi = prior.support
    m_max = len(poisson_weights((n + 1) * hi**2).weights) - 1
    m = np.arange(m_max + 1)

    def integrand(r):
        if r == 0.0:
            return np.where(m == 0, prior.pdf(r), 0.0)
        return prior.pdf(r) * np.exp(poisson_logpmf(m, (n + 1) * r * r))

    res, err = quad_vec(integrand, lo, hi, epsabs=PRIOR_QUAD_TOL, epsrel=0.0, norm="max")
    if err > PRIOR_QUAD_TOL:
        warnings.warn(
            f"prior average reached only {err:.3g} (requested {PRIOR_QUAD_TOL:g})",
            QuadratureWarning,
            stacklevel=2,
        )
    return res


def mec_optimal_error_with_prior(n: int, prior: RicePrior, *, paper_literal: bool = False) -> float:
    if n < 1:
        raise ValueError("n must be >= 1")
    return _bound_from_distribution(averaged_photon_distribution(n, prior), n, paper_literal)


@dataclass(frozen=True)
class FockSector:
    """``|m,+>`` and ``|m,->`` in the basis ``|n1, m - n1>``, ``n1 = 0..m``."""

    m: int
    plus: np.ndarray
    minus: np.ndarray

    @property
    def dim(self) -> int:
        return self.m + 1


def fock_sector(n: int, m: int) -> FockSector:
    n1 = np.arange(m + 1)
    n2 = m - n1
    log_binom = gammaln(m + 1) - gammaln(n1 + 1) - gammaln(n2 + 1)
    log_mag = 0.5 * log_binom + 0.5 * n1 * math.log(n) - 0.5 * m * math.log(n + 1)
    mag = np.exp(log_mag)
    return FockSector(m, mag, mag * np.where(n2 % 2 == 0, 1.0, -1.0))


def sector_trace_norm_oracle(n: int, alpha, m_max: int) -> list[float]:
    """Trace norm of ``p(m) (|m,+><m,+| - |m,-><m,-|)`` for ``m = 0..m_max``.

    Built from explicit sector vectors; the non-zero spectrum of the rank-2
    difference is read off the 2x2 matrix ``diag(p, -p) @ Gram``.
    """
    if m_max > 60:
        raise ValueError("m_max must be <= 60")
    if n < 1:
        raise ValueError("n must be >= 1")
    mean_sq = (n + 1) * abs(amplitude(alpha)) ** 2
    norms = []
    for m in range(m_max + 1):
        sec = fock_sector(n, m)
        basis = np.stack([sec.plus, sec.minus], axis=1)
        gram = basis.T @ basis
        p = float(np.exp(poisson_logpmf(m, mean_sq)))
        eig = np.linalg.eigvals(np.diag([p, -p]) @ gram)
        norms.append(float(np.sum(np.abs(eig))))
    return norms
