"""Coherent-amplitude algebra and the linear-optics reduction to the symmetric problem.

Coherent amplitudes are plain Python ``complex`` numbers. Every public function
runs its amplitude arguments through :func:`amplitude`, which rejects NaN and
infinities.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


def amplitude(value) -> complex:
    """Coerce ``value`` to a finite complex amplitude."""
    z = complex(value)
    if not cmath.isfinite(z):
        raise ValueError(f"amplitude must be finite, got {value!r}")
    return z


@dataclass(frozen=True)
class GeneralProblem:
    """Two unknown classes ``alpha1``/``alpha2`` with ``n`` training copies each.

    ``delta_is_class1`` is the hidden label of the test state, used only when
    simulating.
    """

    alpha1: complex
    alpha2: complex
    n: int
    delta_is_class1: bool = True

    def __post_init__(self):
        object.__setattr__(self, "alpha1", amplitude(self.alpha1))
        object.__setattr__(self, "alpha2", amplitude(self.alpha2))
        if self.n < 1:
            raise ValueError("n must be >= 1")

    @property
    def delta(self) -> complex:
        return self.alpha1 if self.delta_is_class1 else self.alpha2


@dataclass(frozen=True)
class SymmetricProblem:
    """Classify ``|delta>`` in ``{|alpha>, |-alpha>}`` given ``n`` copies of ``|alpha>``."""

    alpha: complex
    n: int
    p_plus: float = 0.5
    p_minus: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "alpha", amplitude(self.alpha))
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not (0.0 <= self.p_plus <= 1.0 and 0.0 <= self.p_minus <= 1.0):
            raise ValueError("priors must lie in [0, 1]")
        if abs(self.p_plus + self.p_minus - 1.0) > 1e-15:
            raise ValueError("priors must sum to 1")

    @property
    def alpha_abs_sq(self) -> float:
        return abs(self.alpha) ** 2


class Reduction(NamedTuple):
    """Output of :func:`reduce_to_symmetric`.

    ``delta_prime`` is ``-alpha'`` when the test state came from class 1 and
    ``+alpha'`` otherwise; ``label`` reads that sign back as the class index.
    ``residual`` is the third output mode, which carries no further use.
    """

    problem: SymmetricProblem
    delta_prime: complex
    residual: complex
    outputs: np.ndarray

    @property
    def label(self) -> int:
        """1 if the test state was class 1 (``delta' = -alpha'``), else 2."""
        a = self.problem.alpha
        if a == 0:
            raise ValueError("degenerate problem: both classes coincide")
        return 1 if abs(self.delta_prime + a) <= abs(self.delta_prime - a) else 2


def overlap_modulus_sq(a, b) -> float:
    """``|<a|b>|^2 = exp(-|a - b|^2)`` for coherent states."""
    return math.exp(-abs(amplitude(a) - amplitude(b)) ** 2)


def concentrate(m: int, a) -> complex:
    """Amplitude left in the single occupied mode after concentrating ``m`` copies of ``|a>``."""
    if m < 1:
        raise ValueError("concentrator needs at least one copy")
    return math.sqrt(m) * amplitude(a)


def scattering_matrix(n: int) -> np.ndarray:
    """Real orthogonal 3-port matrix that splits the concentrated input into
    difference, test-relative and common-mode outputs."""
    if n < 1:
        raise ValueError("n must be >= 1")
    d = 2 * n + 1
    return np.array(
        [
            [1 / math.sqrt(2), -1 / math.sqrt(2), 0.0],
            [1 / math.sqrt(4 * n + 2), 1 / math.sqrt(4 * n + 2), -math.sqrt(2 * n / d)],
            [math.sqrt(n / d), math.sqrt(n / d), math.sqrt(1 / d)],
        ]
    )


def reduce_to_symmetric(problem: GeneralProblem) -> Reduction:
    """Map the general instance onto the symmetric one.

    The first output mode holds ``sqrt(2n+1) alpha'``, i.e. ``2n + 1`` copies of
    ``alpha'``, so the returned symmetric problem has ``n = 2n + 1``.
    """
    n = problem.n
    inputs = np.array(
        [concentrate(n, problem.alpha1), concentrate(n, problem.alpha2), problem.delta],
        dtype=complex,
    )
    outputs = scattering_matrix(n) @ inputs
    copies = 2 * n + 1
    alpha_prime = complex(outputs[0]) / math.sqrt(copies)
    sym = SymmetricProblem(alpha=alpha_prime, n=copies)
    return Reduction(sym, complex(outputs[1]), complex(outputs[2]), outputs)
