"""TD(0) with constant, polynomial and recentered-linear stepsizes, plus Polyak-Ruppert averaging."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .mrp import Mrp, MrpError
from .sampling import RandomSource, draw_observations, empirical_operator

BLOCK = 8192
DEFAULT_OMEGA = 2.0 / 3.0


@dataclass(frozen=True)
class StepsizeSchedule:
    """One of ``constant`` (value = alpha), ``polynomial`` (value = omega) or
    ``recentered_linear`` (value = the discount gamma)."""

    kind: str
    value: float

    def __post_init__(self):
        if self.kind == "constant":
            ok = 0.0 < self.value <= 1.0
        elif self.kind == "polynomial":
            ok = 0.0 < self.value < 1.0
        elif self.kind == "recentered_linear":
            ok = 0.0 <= self.value < 1.0
        else:
            raise ValueError(f"unknown stepsize kind {self.kind!r}")
        if not ok:
            raise ValueError(f"invalid parameter {self.value} for {self.kind} stepsize")

    @classmethod
    def constant(cls, alpha: float) -> StepsizeSchedule:
        return cls("constant", float(alpha))

    @classmethod
    def polynomial(cls, omega: float = DEFAULT_OMEGA) -> StepsizeSchedule:
        return cls("polynomial", float(omega))

    @classmethod
    def recentered_linear(cls, gamma: float) -> StepsizeSchedule:
        return cls("recentered_linear", float(gamma))

    @classmethod
    def parse(cls, text: str, gamma: float) -> StepsizeSchedule:
        """Parse ``constant[:a]``, ``poly[:w]`` or ``rlin``.

        A bare ``constant`` uses ``alpha = 0.1 (1 - gamma)^2``; a bare ``poly`` uses ``omega = 2/3``.
        """
        name, _, arg = text.strip().partition(":")
        name = name.lower()
        if name in ("constant", "const"):
            return cls.constant(float(arg) if arg else 0.1 * (1.0 - gamma) ** 2)
        if name in ("poly", "polynomial"):
            return cls.polynomial(float(arg) if arg else DEFAULT_OMEGA)
        if name in ("rlin", "recentered_linear"):
            if arg:
                raise ValueError("rlin takes no parameter; it uses the MRP discount")
            return cls.recentered_linear(gamma)
        raise ValueError(f"cannot parse stepsize {text!r}")

    def label(self) -> str:
        if self.kind == "constant":
            return f"constant:{self.value!r}"
        if self.kind == "polynomial":
            return f"poly:{self.value!r}"
        return "rlin"

    def sequence(self, start: int, stop: int) -> np.ndarray:
        """Stepsizes for indices ``start, ..., stop - 1``."""
        if start < 1:
            raise ValueError(f"stepsize index must be >= 1, got {start}")
        k = np.arange(start, stop, dtype=float)
        if self.kind == "constant":
            return np.full(k.shape, self.value)
        if self.kind == "polynomial":
            return k ** (-self.value)
        return 1.0 / (1.0 + (1.0 - self.value) * k)


def stepsize_at(schedule: StepsizeSchedule, k: int) -> float:
    return float(schedule.sequence(k, k + 1)[0])


@dataclass
class TdTrajectory:
    final_iterate: np.ndarray
    final_average: np.ndarray
    steps: int
    schedule: StepsizeSchedule
    # iterates theta_1..theta_{n+1}, only in trace mode
    iterates: np.ndarray | None = None


def td_step(mrp: Mrp, theta, alpha_k: float, rng: RandomSource) -> np.ndarray:
    """One TD(0) update ``(1 - a) theta + a T_hat_k(theta)`` using a fresh sample."""
    if not 0.0 < alpha_k <= 1.0:
        raise ValueError(f"stepsize must lie in (0, 1], got {alpha_k}")
    theta = np.asarray(theta, dtype=float)
    states, rewards = draw_observations(mrp, rng, 1)
    return (1.0 - alpha_k) * theta + alpha_k * empirical_operator(mrp, states[0], rewards[0], theta)


def run_td(
    mrp: Mrp,
    schedule: StepsizeSchedule,
    n: int,
    rng: RandomSource,
    theta0=None,
    trace: bool = False,
) -> TdTrajectory:
    """Run ``n`` TD(0) steps from ``theta0`` (zeros by default).

    Returns the last iterate ``theta_{n+1}`` and the Polyak-Ruppert average of
    ``theta_1, ..., theta_n``.  Consumes exactly ``n`` samples.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    D = mrp.dim
    theta = np.zeros(D) if theta0 is None else np.array(theta0, dtype=float)
    if theta.shape != (D,):
        raise MrpError(f"theta0 has shape {theta.shape}, expected ({D},)")
    avg = np.zeros(D)
    count = 0
    iterates = np.empty((n + 1, D)) if trace else None
    for start in range(0, n, BLOCK):
        stop = min(start + BLOCK, n)
        states, rewards = draw_observations(mrp, rng, stop - start)
        alphas = schedule.sequence(start + 1, stop + 1)
        tr = iterates[start:stop] if trace else np.empty((0, D))
        count = _kernels.td_block(theta, avg, count, states, rewards, alphas, mrp.discount, tr)
    if trace:
        iterates[n] = theta
    return TdTrajectory(theta, avg, n, schedule, iterates)
