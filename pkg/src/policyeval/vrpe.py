"""Variance-reduced policy evaluation: recentered TD updates run in epochs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .mrp import Mrp, MrpError
from .sampling import RandomSource, draw_observations, empirical_operator
from .td import BLOCK, StepsizeSchedule

BUDGETED = "budgeted"
PAPER_CONSTANTS = "paper_constants"
# literal constant in the recentering sample sizes: 4^2 * 9^2
RECENTER_CONST = 4**2 * 9**2


class BudgetError(ValueError):
    """The sample budget cannot accommodate the requested configuration."""


@dataclass(frozen=True)
class VrpeConfig:
    epochs: int
    epoch_length: int
    recentering_sizes: tuple
    delta: float
    schedule: StepsizeSchedule
    budget_mode: str = BUDGETED
    total_n: int | None = None

    @property
    def samples_required(self) -> int:
        return self.epochs * self.epoch_length + sum(self.recentering_sizes)

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "epoch_length": self.epoch_length,
            "recentering_sizes": list(self.recentering_sizes),
            "delta": self.delta,
            "stepsize": self.schedule.label(),
            "budget_mode": self.budget_mode,
            "total_n": self.total_n,
        }


def num_epochs(total_n: int, d: int, delta: float, gamma: float) -> float:
    """Unrounded ``log2(N (1-gamma)^2 / (8 log((8D/delta) log N)))``."""
    inner = 8.0 * math.log((8.0 * d / delta) * math.log(total_n))
    return math.log2(total_n * (1.0 - gamma) ** 2 / inner)


def vrpe_parameters(
    total_n: int,
    d: int,
    delta: float,
    gamma: float,
    schedule: StepsizeSchedule,
    mode: str = BUDGETED,
) -> VrpeConfig:
    """Epoch count, epoch length and recentering sizes for a budget of ``total_n`` samples.

    The epoch count is rounded to the nearest integer and clamped to at least one;
    the epoch length is ``floor(N / 2M)``.  ``budgeted`` mode rescales the doubling
    sequence of recentering sizes so that it spends at most ``N/2`` samples;
    ``paper_constants`` keeps the literal constants and fails if they do not fit.
    """
    if total_n < 3:
        raise BudgetError(f"total sample budget {total_n} is too small")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    M = max(1, math.floor(num_epochs(total_n, d, delta, gamma) + 0.5))
    K = total_n // (2 * M)
    if mode == BUDGETED:
        # floor((N/2) 2^m / (2^{M+1} - 2)) in exact integer arithmetic
        denom = 2 ** (M + 2) - 4
        sizes = tuple(total_n * 2**m // denom for m in range(1, M + 1))
    elif mode == PAPER_CONSTANTS:
        base = RECENTER_CONST * math.log(8.0 * M * d / delta) / (1.0 - gamma) ** 2
        sizes = tuple(math.ceil(2**m * base) for m in range(1, M + 1))
        if sum(sizes) > total_n / 2:
            raise BudgetError(
                f"recentering sizes with literal constants need {sum(sizes)} samples, "
                f"more than half the budget ({total_n / 2:g})"
            )
    else:
        raise ValueError(f"unknown budget mode {mode!r}")
    if K < 1 or sizes[0] < 1:
        raise BudgetError(f"budget {total_n} leaves an empty epoch (K={K}, N_1={sizes[0]})")
    return VrpeConfig(M, K, sizes, delta, schedule, mode, total_n)


@dataclass(frozen=True)
class EpochLengthReport:
    """Unit-constant check of the stepsize-dependent sample-size condition.

    ``passed`` compares the epoch length ``K`` with the threshold.  The same
    condition is sometimes stated for ``N / M = 2K``; that count and its verdict
    are kept in ``notes`` under ``samples_per_epoch`` and ``passed_per_epoch``.
    """

    kind: str
    epoch_length: int
    threshold: float
    passed: bool
    exponent: float | None = None
    alpha_cap: float | None = None
    notes: dict = field(default_factory=dict)


def check_epoch_length(config: VrpeConfig, d: int, total_n: int, gamma: float) -> EpochLengthReport:
    """Compare the epoch length ``K`` with the stepsize-dependent threshold (all constants set to 1)."""
    log_term = math.log(8.0 * total_n * d / config.delta)
    k = config.epoch_length
    per_epoch = total_n / config.epochs
    s = config.schedule
    gap = 1.0 - gamma
    exponent = cap = None
    alpha_ok = True
    if s.kind == "recentered_linear":
        exponent = 3.0
        threshold = log_term / gap**3
    elif s.kind == "polynomial":
        w = s.value
        exponent = max(1.0 / (1.0 - w), 2.0 / w)
        threshold = log_term * gap ** (-exponent)
    else:
        alpha = s.value
        cap = gap**2 / (5**2 * 32**2 * log_term)
        threshold = 1.0 / math.log(1.0 / (1.0 - alpha * gap))
        alpha_ok = alpha <= cap
    notes = {"samples_per_epoch": per_epoch, "passed_per_epoch": alpha_ok and per_epoch >= threshold}
    if cap is not None:
        notes.update(alpha=s.value, alpha_within_cap=alpha_ok)
    return EpochLengthReport(s.kind, k, threshold, alpha_ok and k >= threshold,
                             exponent=exponent, alpha_cap=cap, notes=notes)


def monte_carlo_recenter(mrp: Mrp, theta_bar, n_m: int, rng: RandomSource) -> np.ndarray:
    """Average of ``n_m`` fresh empirical Bellman operators at ``theta_bar``."""
    if n_m < 1:
        raise ValueError(f"n_m must be >= 1, got {n_m}")
    theta_bar = np.asarray(theta_bar, dtype=float)
    total = np.zeros(mrp.dim)
    for start in range(0, n_m, BLOCK):
        stop = min(start + BLOCK, n_m)
        states, rewards = draw_observations(mrp, rng, stop - start)
        total += empirical_operator(mrp, states, rewards, theta_bar).sum(axis=0)
    return total / n_m


def vrpe_update(mrp: Mrp, theta, alpha: float, theta_bar, recentered_target, rng: RandomSource) -> np.ndarray:
    """``(1-a) theta + a (T_k(theta) - T_k(theta_bar) + target)`` with one shared draw."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"stepsize must lie in (0, 1], got {alpha}")
    theta = np.asarray(theta, dtype=float)
    states, rewards = draw_observations(mrp, rng, 1)
    at_theta = empirical_operator(mrp, states[0], rewards[0], theta)
    at_bar = empirical_operator(mrp, states[0], rewards[0], theta_bar)
    return (1.0 - alpha) * theta + alpha * (at_theta - at_bar + np.asarray(recentered_target, dtype=float))


def run_epoch(
    mrp: Mrp,
    theta_bar,
    k: int,
    n_m: int,
    schedule: StepsizeSchedule,
    rng: RandomSource,
) -> np.ndarray:
    """One epoch: estimate ``T(theta_bar)`` from ``n_m`` samples, then ``k`` recentered steps from ``theta_bar``."""
    if k < 1:
        raise ValueError(f"epoch length must be >= 1, got {k}")
    theta_bar = np.array(theta_bar, dtype=float)
    if theta_bar.shape != (mrp.dim,):
        raise MrpError(f"theta_bar has shape {theta_bar.shape}, expected ({mrp.dim},)")
    target = monte_carlo_recenter(mrp, theta_bar, n_m, rng)
    theta = theta_bar.copy()
    for start in range(0, k, BLOCK):
        stop = min(start + BLOCK, k)
        states, rewards = draw_observations(mrp, rng, stop - start)
        alphas = schedule.sequence(start + 1, stop + 1)
        _kernels.vr_block(theta, theta_bar, target, states, rewards, alphas, mrp.discount)
    return theta


def run_vrpe(mrp: Mrp, config: VrpeConfig, rng: RandomSource, theta0=None) -> np.ndarray:
    """Chain ``config.epochs`` epochs, each recentered at the previous epoch's output."""
    theta = np.zeros(mrp.dim) if theta0 is None else np.array(theta0, dtype=float)
    before = rng.samples
    for n_m in config.recentering_sizes:
        theta = run_epoch(mrp, theta, config.epoch_length, n_m, config.schedule, rng)
    used = rng.samples - before
    assert used == config.samples_required, f"consumed {used} samples, expected {config.samples_required}"
    if config.total_n is not None:
        assert used <= config.total_n, f"consumed {used} samples, budget is {config.total_n}"
    return theta
