"""Generative observation model: one next state per state plus a Gaussian reward vector.

Random streams are keyed by ``(master_seed, stream_id)``.  Each stream owns three
independent Philox generators derived with :class:`numpy.random.SeedSequence`:
one for transitions, one for rewards and one for auxiliary draws (Monte Carlo
estimates).  Keeping them separate makes block draws chunk-invariant: drawing
``n`` observations at once yields the same values as ``n`` single draws.
Gaussian variates use numpy's ziggurat sampler (``Generator.standard_normal``).
"""

from __future__ import annotations

import os

import numpy as np

from .mrp import Mrp, MrpError

SEED_ENV_VAR = "POLICYEVAL_SEED"
PHASE_BITS = 16


def stream_id(trial: int, phase: int = 0) -> int:
    """``trial * 2**16 + phase``; phase must fit in 16 bits."""
    if not 0 <= phase < 2**PHASE_BITS:
        raise ValueError(f"phase must lie in [0, 2**{PHASE_BITS}), got {phase}")
    if trial < 0:
        raise ValueError(f"trial index must be >= 0, got {trial}")
    return trial * 2**PHASE_BITS + phase


def default_seed(fallback: int = 0) -> int:
    value = os.environ.get(SEED_ENV_VAR)
    return int(value) if value is not None else fallback


class RandomSource:
    """A reproducible stream of generative samples.

    ``samples`` counts generative queries, i.e. how many ``(Z_k, R_k)`` pairs
    have been drawn through this source.
    """

    def __init__(self, master_seed: int, stream: int = 0):
        if not (0 <= master_seed < 2**64 and 0 <= stream < 2**64):
            raise ValueError("master_seed and stream must be unsigned 64-bit integers")
        self.master_seed = int(master_seed)
        self.stream = int(stream)
        seq = np.random.SeedSequence(entropy=self.master_seed, spawn_key=(self.stream,))
        trans, rew, aux = seq.spawn(3)
        self.transition_gen = np.random.Generator(np.random.Philox(trans))
        self.reward_gen = np.random.Generator(np.random.Philox(rew))
        self.aux_gen = np.random.Generator(np.random.Philox(aux))
        self.samples = 0

    def __repr__(self):
        return f"RandomSource(master_seed={self.master_seed}, stream={self.stream}, samples={self.samples})"


def draw_transitions(mrp: Mrp, rng: RandomSource, n: int) -> np.ndarray:
    """``n`` independent transition samples as an ``(n, D)`` array of next-state indices."""
    u = rng.transition_gen.random((n, mrp.dim))
    out = np.empty((n, mrp.dim), dtype=np.int64)
    cum = mrp.cumulative
    for j in range(mrp.dim):
        out[:, j] = np.searchsorted(cum[j], u[:, j], side="right")
    np.minimum(out, mrp.dim - 1, out=out)
    rng.samples += n
    return out


def draw_reward_block(mrp: Mrp, rng: RandomSource, n: int) -> np.ndarray:
    if mrp.reward_noise == 0.0:
        return np.broadcast_to(mrp.rewards, (n, mrp.dim)).copy()
    return mrp.rewards + mrp.reward_noise * rng.reward_gen.standard_normal((n, mrp.dim))


def draw_observations(mrp: Mrp, rng: RandomSource, n: int):
    """Draw ``n`` generative samples; returns ``(next_states, rewards)``, both ``(n, D)``."""
    return draw_transitions(mrp, rng, n), draw_reward_block(mrp, rng, n)


def draw_transition(mrp: Mrp, rng: RandomSource) -> np.ndarray:
    """One row-wise next-state draw; entry ``j`` is distributed as row ``j`` of ``P``."""
    return draw_transitions(mrp, rng, 1)[0]


def draw_rewards(mrp: Mrp, rng: RandomSource) -> np.ndarray:
    return draw_reward_block(mrp, rng, 1)[0]


def transition_matrix(next_states, dim: int) -> np.ndarray:
    """The 0/1 matrix with a single one per row encoded by ``next_states``."""
    Z = np.zeros((dim, dim))
    Z[np.arange(dim), np.asarray(next_states)] = 1.0
    return Z


def empirical_operator(mrp: Mrp, next_states, rewards, theta) -> np.ndarray:
    """``R_k + gamma Z_k theta``; also accepts stacked ``(n, D)`` samples."""
    theta = np.asarray(theta, dtype=float)
    next_states = np.asarray(next_states)
    rewards = np.asarray(rewards, dtype=float)
    if theta.shape != (mrp.dim,) or next_states.shape[-1] != mrp.dim or rewards.shape != next_states.shape:
        raise MrpError(
            f"dimension mismatch: theta {theta.shape}, next_states {next_states.shape}, "
            f"rewards {rewards.shape} for D={mrp.dim}"
        )
    return rewards + mrp.discount * theta[next_states]
