"""Compiled inner loops for TD(0) and the variance-reduced epoch.

Samples are pre-drawn in blocks by the caller; the kernels only run the
recursions, so results are identical to a step-by-step Python loop.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def td_block(theta, avg, count, next_states, rewards, alphas, gamma, trace):
    """Run ``len(alphas)`` TD(0) steps in place; returns the updated average count.

    The running average absorbs the current iterate before each step, so after
    the call ``avg`` is the mean of every iterate visited before the last step.
    If ``trace`` has rows, iterate ``k`` of the block is written to ``trace[k]``.
    """
    n, D = next_states.shape
    new = np.empty(D)
    for k in range(n):
        count += 1
        for j in range(D):
            avg[j] += (theta[j] - avg[j]) / count
        if trace.shape[0] > 0:
            for j in range(D):
                trace[k, j] = theta[j]
        a = alphas[k]
        for j in range(D):
            new[j] = (1.0 - a) * theta[j] + a * (rewards[k, j] + gamma * theta[next_states[k, j]])
        for j in range(D):
            theta[j] = new[j]
    return count


@njit(cache=True)
def vr_block(theta, theta_bar, target, next_states, rewards, alphas, gamma):
    """Variance-reduced steps in place: the same draw feeds both empirical operators."""
    n, D = next_states.shape
    new = np.empty(D)
    for k in range(n):
        a = alphas[k]
        for j in range(D):
            s = next_states[k, j]
            at_theta = rewards[k, j] + gamma * theta[s]
            at_bar = rewards[k, j] + gamma * theta_bar[s]
            new[j] = (1.0 - a) * theta[j] + a * (at_theta - at_bar + target[j])
        for j in range(D):
            theta[j] = new[j]
