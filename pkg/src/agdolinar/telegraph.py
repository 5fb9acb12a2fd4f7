"""Monte Carlo oracle for feedback receivers, and the sliced beam-splitter chain.

Each trial tracks whether the running hypothesis is right. While it is right,
clicks arrive at rate ``lambda(t)``; while it is wrong, at rate ``mu(t)``. Every
click flips the hypothesis. Time is cut into ``K`` equal slices and each slice
holds one Bernoulli click with probability ``rate * dt``.

Trials are simulated event by event: given the current slice, the next click
slice is drawn by inverting the cumulative hazard ``-sum log(1 - p_i)``. That is
the same distribution as one Bernoulli draw per slice at a cost proportional to
the number of clicks.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .agnostic import agnostic_rates, optimal_trajectory
from .dolinar import dolinar_success
from .optics import amplitude

MAX_SLICE_PROB = 0.05
CHUNK = 1 << 16
DOLINAR_MC_T0 = 1e-4


@dataclass(frozen=True)
class McConfig:
    trials: int
    slices: int = 20_000
    seed: int = 0

    def __post_init__(self):
        if self.trials < 1 or self.slices < 1:
            raise ValueError("trials and slices must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class McResult:
    success_rate: float
    trials: int
    std_error: float
    slices: int
    times: tuple = ()
    q_plus: tuple = ()
    q_minus: tuple = ()


def _dolinar_margin(p_plus: float, alpha_abs_sq: float, t: np.ndarray) -> np.ndarray:
    """``2 P_c(t) - 1`` of the optimal receiver, vectorised over ``t``."""
    return np.sqrt(1.0 - 4.0 * p_plus * (1.0 - p_plus) * np.exp(-4.0 * alpha_abs_sq * t))


@dataclass(frozen=True)
class DolinarRateModel:
    """Optimal Dolinar control for ``+-alpha`` with priors ``p_plus``, ``1 - p_plus``.
    The likelier class is labelled ``+`` because the receiver starts on it.

    With flat priors the rates diverge at ``t = 0``, so simulation starts at
    ``t_start`` from the exact probability of being right there.
    """

    alpha_abs_sq: float
    p_plus: float = 0.5
    t_start: float = 0.0

    def __post_init__(self):
        if not 0.5 <= self.p_plus <= 1.0:
            raise ValueError("p_plus must lie in [1/2, 1]")
        if self.p_plus == 0.5 and self.alpha_abs_sq > 0 and self.t_start <= 0:
            object.__setattr__(self, "t_start", DOLINAR_MC_T0)

    @property
    def pc_start(self) -> float | None:
        if self.t_start == 0.0:
            return None
        return dolinar_success(self.p_plus, 1 - self.p_plus, self.alpha_abs_sq, self.t_start)

    def __call__(self, t):
        a = self.alpha_abs_sq
        inv = 1.0 / _dolinar_margin(self.p_plus, a, np.asarray(t, dtype=float))
        return a * (1.0 - inv) ** 2, a * (1.0 + inv) ** 2


@dataclass(frozen=True)
class AgnosticRateModel:
    """Agnostic receiver with ``n_train`` copies, steered by the optimal angle
    computed for ``alpha_abs_sq_control`` (default: the true value)."""

    alpha_abs_sq: float
    n_train: int
    alpha_abs_sq_control: float | None = None
    grid_steps: int = 4000
    t_start: float = 0.0
    _traj: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        ctrl = self.alpha_abs_sq if self.alpha_abs_sq_control is None else self.alpha_abs_sq_control
        object.__setattr__(self, "_traj", optimal_trajectory(ctrl, self.n_train, self.grid_steps))

    @property
    def pc_start(self) -> None:
        return None

    def __call__(self, t):
        r = agnostic_rates(self._traj.at(t), self.alpha_abs_sq, self.n_train)
        return np.asarray(r.lambda_t, dtype=float), np.asarray(r.mu_t, dtype=float)


def _slice_probabilities(model, slices: int):
    """Click probabilities per slice, refining until every one is <= 0.05."""
    t0 = float(getattr(model, "t_start", 0.0))
    k = slices
    while True:
        dt = (1.0 - t0) / k
        mid = t0 + dt * (np.arange(k) + 0.5)
        lam, mu = model(mid)
        if min(lam.min(), mu.min()) < 0:
            raise ValueError("rates must be non-negative")
        p_lam, p_mu = lam * dt, mu * dt
        if max(p_lam.max(), p_mu.max()) <= MAX_SLICE_PROB:
            return k, p_lam, p_mu
        k *= 2


def _hazard(p: np.ndarray) -> np.ndarray:
    return np.concatenate([[0.0], np.cumsum(-np.log1p(-p))])


def _run_chunk(seed_seq, size, p_plus, pc_start, hazards, ck_idx):
    rng = np.random.default_rng(seed_seq)
    k = len(hazards[0]) - 1
    is_plus = rng.random(size) < p_plus
    if pc_start is None:
        right = is_plus.copy()  # z(0) = +
    else:
        right = rng.random(size) < pc_start
    at_ck = np.repeat(right[:, None], len(ck_idx), axis=1)
    pos = np.zeros(size, dtype=np.int64)
    live = np.arange(size)
    while live.size:
        state = right[live]
        nxt = np.empty(live.size, dtype=np.int64)
        draws = rng.exponential(size=live.size)
        for flag, h in ((True, hazards[0]), (False, hazards[1])):
            sel = state == flag
            target = h[pos[live[sel]]] + draws[sel]
            nxt[sel] = np.searchsorted(h, target, side="left") - 1
        clicked = nxt < k
        live, nxt = live[clicked], nxt[clicked]
        right[live] = ~right[live]
        if len(ck_idx):
            at_ck[live] ^= nxt[:, None] < ck_idx[None, :]
        pos[live] = nxt + 1
    return (
        int(right.sum()),
        is_plus.sum(),
        (at_ck & is_plus[:, None]).sum(axis=0),
        (at_ck & ~is_plus[:, None]).sum(axis=0),
    )


def simulate_receiver(
    rates_for,
    cfg: McConfig,
    p_plus: float = 0.5,
    *,
    checkpoints=(),
    workers: int = 1,
) -> McResult:
    """Estimate the success probability of a feedback receiver.

    ``rates_for(t)`` returns ``(lambda, mu)`` arrays and may carry ``t_start``
    and ``pc_start`` attributes for a delayed start. ``checkpoints`` are times at
    which ``q_plus = P[z = + | +]`` and ``q_minus = P[z = - | -]`` are recorded.
    Results depend only on ``cfg``, never on ``workers``.
    """
    if not 0.0 <= p_plus <= 1.0:
        raise ValueError("p_plus must lie in [0, 1]")
    t0 = float(getattr(rates_for, "t_start", 0.0))
    pc_start = getattr(rates_for, "pc_start", None)
    k, p_lam, p_mu = _slice_probabilities(rates_for, cfg.slices)
    hazards = (_hazard(p_lam), _hazard(p_mu))
    ck = np.asarray(checkpoints, dtype=float)
    if np.any((ck < t0) | (ck > 1.0)):
        raise ValueError("checkpoints must lie in [t_start, 1]")
    ck_idx = np.rint((ck - t0) / (1.0 - t0) * k).astype(np.int64)

    sizes = [CHUNK] * (cfg.trials // CHUNK) + ([cfg.trials % CHUNK] if cfg.trials % CHUNK else [])
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(sizes))
    jobs = [(s, n, p_plus, pc_start, hazards, ck_idx) for s, n in zip(seeds, sizes)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_run_chunk, *zip(*jobs)))
    else:
        parts = [_run_chunk(*j) for j in jobs]

    wins = sum(p[0] for p in parts)
    n_plus = sum(int(p[1]) for p in parts)
    n_minus = cfg.trials - n_plus
    right_plus = sum(p[2] for p in parts) if len(ck) else np.zeros(0)
    right_minus = sum(p[3] for p in parts) if len(ck) else np.zeros(0)
    rate = wins / cfg.trials
    return McResult(
        success_rate=rate,
        trials=cfg.trials,
        std_error=math.sqrt(rate * (1.0 - rate) / cfg.trials),
        slices=k,
        times=tuple(float(x) for x in ck),
        q_plus=tuple(float(x) / n_plus for x in right_plus) if n_plus else (),
        q_minus=tuple(float(x) / n_minus for x in right_minus) if n_minus else (),
    )


def slice_chain_success(rates_for, slices: int, p_plus: float = 0.5) -> float:
    """Exact expectation of :func:`simulate_receiver` for the same slicing."""
    _, p_lam, p_mu = _slice_probabilities(rates_for, slices)
    pc_start = getattr(rates_for, "pc_start", None)
    q = np.array([1.0, 0.0]) if pc_start is None else np.array([pc_start, pc_start])
    for a, b in zip(p_lam, p_mu):
        q = q * (1.0 - a) + (1.0 - q) * b
    return float(p_plus * q[0] + (1.0 - p_plus) * q[1])


def discretized_dolinar(k_slices: int, alpha, p_plus: float = 0.5) -> float:
    """Success probability of a chain of ``k_slices`` weak beam-splitter taps.

    Each tap carries ``alpha / sqrt(K)``, is displaced according to the
    running hypothesis and photon-counted; the hypothesis follows the parity of
    the total count. Displacements follow the continuous optimal control at
    slice midpoints. A tap whose displaced amplitude has mean photon number
    ``nu`` gives an odd count with probability ``(1 - exp(-2 nu)) / 2``.
    """
    if k_slices < 10:
        raise ValueError("k_slices must be >= 10")
    if not 0.0 <= p_plus <= 1.0:
        raise ValueError("p_plus must lie in [0, 1]")
    a2 = abs(amplitude(alpha)) ** 2
    q = max(p_plus, 1.0 - p_plus)
    if a2 == 0.0:
        return q
    mid = (np.arange(k_slices) + 0.5) / k_slices
    inv = 1.0 / _dolinar_margin(p_plus, a2, mid)
    flip_right = -0.5 * np.expm1(-2.0 * a2 * (1.0 - inv) ** 2 / k_slices)
    flip_wrong = -0.5 * np.expm1(-2.0 * a2 * (1.0 + inv) ** 2 / k_slices)
    for fr, fw in zip(flip_right, flip_wrong):
        q = q * (1.0 - fr) + (1.0 - q) * fw
    return float(q)


__all__ = [
    "McConfig",
    "McResult",
    "DolinarRateModel",
    "AgnosticRateModel",
    "simulate_receiver",
    "slice_chain_success",
    "discretized_dolinar",
]
