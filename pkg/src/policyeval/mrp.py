"""Tabular discounted Markov reward processes and their exact quantities."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

ROW_SUM_TOL = 1e-12
NEGATIVE_TOL = 1e-15


class MrpError(ValueError):
    """Raised for malformed MRP inputs."""


@dataclass(frozen=True, eq=False)
class Mrp:
    """A Markov reward process ``(P, r)`` with discount and Gaussian reward noise.

    Construction validates the instance: rows of ``transitions`` must sum to
    one within ``ROW_SUM_TOL``; entries in ``[-NEGATIVE_TOL, 0)`` are treated
    as round-off, clamped to zero and the row renormalized.  Arrays are stored
    read-only.
    """

    transitions: np.ndarray
    rewards: np.ndarray
    discount: float
    reward_noise: float = 0.0

    def __post_init__(self):
        P = np.array(self.transitions, dtype=float)
        r = np.array(self.rewards, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] < 1:
            raise MrpError(f"transitions must be a non-empty square matrix, got shape {P.shape}")
        if r.shape != (P.shape[0],):
            raise MrpError(f"rewards must have shape ({P.shape[0]},), got {r.shape}")
        if not (np.all(np.isfinite(P)) and np.all(np.isfinite(r))):
            raise MrpError("transitions and rewards must be finite")
        gamma = float(self.discount)
        if not 0.0 <= gamma < 1.0:
            raise MrpError(f"discount must lie in [0, 1), got {gamma}")
        sigma = float(self.reward_noise)
        if not (sigma >= 0.0 and math.isfinite(sigma)):
            raise MrpError(f"reward_noise must be a finite value >= 0, got {sigma}")

        if P.min() < -NEGATIVE_TOL:
            i, j = np.unravel_index(np.argmin(P), P.shape)
            raise MrpError(f"negative transition probability {P[i, j]} at ({i}, {j})")
        clamped = P < 0
        P[clamped] = 0.0
        row_sums = P.sum(axis=1)
        bad = np.abs(row_sums - 1.0) > ROW_SUM_TOL
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise MrpError(f"row {i} of transitions sums to {row_sums[i]!r}, not 1")
        rows = clamped.any(axis=1)
        P[rows] /= row_sums[rows, None]

        P.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "transitions", P)
        object.__setattr__(self, "rewards", r)
        object.__setattr__(self, "discount", gamma)
        object.__setattr__(self, "reward_noise", sigma)

    @property
    def dim(self) -> int:
        return self.rewards.shape[0]

    @cached_property
    def resolvent(self) -> np.ndarray:
        """``U = (I - gamma P)^{-1}`` by dense LU solve."""
        U = np.linalg.solve(np.eye(self.dim) - self.discount * self.transitions, np.eye(self.dim))
        U.setflags(write=False)
        return U

    @cached_property
    def cumulative(self) -> np.ndarray:
        """Row-wise cumulative sums used for inverse-CDF sampling; last column pinned to 1."""
        c = np.cumsum(self.transitions, axis=1)
        c[:, -1] = 1.0
        c.setflags(write=False)
        return c

    def to_dict(self) -> dict:
        return {
            "discount": self.discount,
            "reward_noise": self.reward_noise,
            "rewards": self.rewards.tolist(),
            "transitions": self.transitions.tolist(),
        }


def validate(transitions, rewards, discount, reward_noise=0.0) -> Mrp:
    """Build a validated :class:`Mrp` from raw arrays (raises :class:`MrpError`)."""
    return Mrp(transitions, rewards, discount, reward_noise)


def load_mrp(path) -> Mrp:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    try:
        return Mrp(
            data["transitions"],
            data["rewards"],
            data["discount"],
            data.get("reward_noise", 0.0),
        )
    except KeyError as exc:
        raise MrpError(f"MRP file {path} is missing field {exc}") from None


def save_mrp(mrp: Mrp, path) -> None:
    Path(path).write_text(json.dumps(mrp.to_dict(), indent=2) + "\n", encoding="utf-8")


def _as_values(mrp: Mrp, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (mrp.dim,):
        raise MrpError(f"value vector has shape {theta.shape}, expected ({mrp.dim},)")
    return theta


def solve_value_function(mrp: Mrp) -> np.ndarray:
    """Return ``theta* = (I - gamma P)^{-1} r`` via a dense solve."""
    A = np.eye(mrp.dim) - mrp.discount * mrp.transitions
    return np.linalg.solve(A, mrp.rewards)


def bellman_apply(mrp: Mrp, theta) -> np.ndarray:
    """Population Bellman operator ``theta -> r + gamma P theta``."""
    theta = _as_values(mrp, theta)
    return mrp.rewards + mrp.discount * (mrp.transitions @ theta)


def span_seminorm(theta) -> float:
    theta = np.asarray(theta, dtype=float)
    return float(theta.max() - theta.min())


@dataclass(frozen=True)
class FamilyParams:
    """Scalarization of the two-state chain: stay probability, reward scale, and tau."""

    lam: float
    gamma: float

    def __post_init__(self):
        if not 0.25 < self.gamma < 1.0:
            raise MrpError(f"two-state family needs gamma in (1/4, 1), got {self.gamma}")
        if self.lam < 0:
            raise MrpError(f"lambda must be >= 0, got {self.lam}")

    @property
    def p(self) -> float:
        return (4.0 * self.gamma - 1.0) / (3.0 * self.gamma)

    @property
    def nu_scalar(self) -> float:
        return 1.0

    @property
    def tau(self) -> float:
        return 1.0 - (1.0 - self.gamma) ** self.lam

    def closed_form_values(self) -> np.ndarray:
        g, nu, tau = self.gamma, self.nu_scalar, self.tau
        return np.array([nu * (3.0 + tau) / (4.0 * (1.0 - g)), nu * tau / (1.0 - g)])


def two_state_family(gamma: float, lam: float) -> Mrp:
    """The 2-state chain: state 1 stays w.p. ``p`` else moves to the absorbing state 2.

    Rewards are deterministic, ``(nu, nu * tau)`` with ``nu = 1``.
    """
    fp = FamilyParams(lam=lam, gamma=gamma)
    p = fp.p
    P = [[p, 1.0 - p], [0.0, 1.0]]
    r = [fp.nu_scalar, fp.nu_scalar * fp.tau]
    return Mrp(P, r, gamma, 0.0)


def sample_size_rule(gamma: float, exponent: int) -> int:
    """``ceil(8 / (1 - gamma)^exponent)`` for exponent 2 or 3."""
    if exponent not in (2, 3):
        raise ValueError(f"exponent must be 2 or 3, got {exponent}")
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    # round before ceil so that e.g. 8/0.1**3 = 8000.000000000002 maps to 8000
    return math.ceil(round(8.0 / (1.0 - gamma) ** exponent, 9))


def random_mrp(rng: np.random.Generator, dim: int, discount: float, reward_noise: float = 0.0,
               zero_fraction: float = 0.0) -> Mrp:
    """Random instance: Dirichlet(1) rows with an optional fraction of structural zeros,
    rewards uniform on [0, 1]."""
    P = rng.dirichlet(np.ones(dim), size=dim)
    if zero_fraction > 0:
        mask = rng.random((dim, dim)) < zero_fraction
        mask[np.arange(dim), rng.integers(0, dim, size=dim)] = False
        P[mask] = 0.0
        P /= P.sum(axis=1, keepdims=True)
    return Mrp(P, rng.random(dim), discount, reward_noise)
