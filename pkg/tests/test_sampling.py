import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from policyeval.mrp import Mrp, MrpError, bellman_apply, random_mrp
from policyeval.sampling import (
    RandomSource,
    draw_observations,
    draw_rewards,
    draw_transition,
    draw_transitions,
    empirical_operator,
    stream_id,
    transition_matrix,
)


def outcomes(mrp):
    """Every joint next-state vector with its probability (rows are independent)."""
    supports = [np.flatnonzero(mrp.transitions[j] > 0) for j in range(mrp.dim)]
    for combo in itertools.product(*supports):
        prob = math.prod(mrp.transitions[j, s] for j, s in enumerate(combo))
        yield np.array(combo), prob


def test_permutation_is_deterministic(permutation_mrp):
    rng = RandomSource(5, 0)
    for _ in range(20):
        np.testing.assert_array_equal(draw_transition(permutation_mrp, rng), [1, 2, 0])


def test_absorbing_state_stays(family):
    states = draw_transitions(family, RandomSource(1, 2), 5000)
    assert np.all(states[:, 1] == 1)


def test_stay_frequency(family):
    p = family.transitions[0, 0]
    n = 100_000
    stay = np.mean(draw_transitions(family, RandomSource(11, 0), n)[:, 0] == 0)
    assert abs(stay - p) <= 3 * math.sqrt(p * (1 - p) / n)


def test_zero_probability_never_drawn():
    P = [[0.0, 0.5, 0.5], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]
    m = Mrp(P, np.zeros(3), 0.5)
    s = draw_transitions(m, RandomSource(3, 0), 20_000)
    assert not np.any(s[:, 0] == 0)
    assert np.all(s[:, 1] == 0)
    assert np.all(s[:, 2] == 2)


def test_noiseless_rewards_exact(family):
    np.testing.assert_array_equal(draw_rewards(family, RandomSource(0, 0)), family.rewards)


def test_reward_mean_band():
    m = Mrp(np.eye(1), [0.0], 0.5, reward_noise=1.0)
    n = 100_000
    _, rw = draw_observations(m, RandomSource(7, 0), n)
    assert abs(rw.mean()) <= 3 / math.sqrt(n)


def test_reward_variance_band():
    m = Mrp(np.eye(1), [0.0], 0.5, reward_noise=2.0)
    _, rw = draw_observations(m, RandomSource(8, 0), 100_000)
    assert abs(rw.var(ddof=1) - 4.0) <= 0.4


def test_sample_counter(family):
    rng = RandomSource(0, 0)
    draw_transition(family, rng)
    draw_observations(family, rng, 10)
    assert rng.samples == 11


def test_determinism_and_chunk_invariance():
    m = random_mrp(np.random.default_rng(0), 4, 0.8, reward_noise=0.5)
    a_s, a_r = draw_observations(m, RandomSource(42, 9), 100)
    b = RandomSource(42, 9)
    parts = [draw_observations(m, b, k) for k in (1, 30, 69)]
    np.testing.assert_array_equal(a_s, np.concatenate([p[0] for p in parts]))
    np.testing.assert_array_equal(a_r, np.concatenate([p[1] for p in parts]))


def test_distinct_streams_uncorrelated():
    n = 10_000
    u = RandomSource(3, stream_id(0, 0)).transition_gen.random(n)
    v = RandomSource(3, stream_id(1, 0)).transition_gen.random(n)
    assert abs(np.corrcoef(u, v)[0, 1]) <= 3 / math.sqrt(n)


def test_stream_id_layout():
    assert stream_id(0, 0) == 0
    assert stream_id(3, 2) == 3 * 65536 + 2
    with pytest.raises(ValueError):
        stream_id(1, 70000)


def test_empirical_operator_matches_matrix_form(family):
    rng = RandomSource(0, 0)
    s, rw = draw_observations(family, rng, 1)
    theta = np.array([1.0, 2.0])
    Z = transition_matrix(s[0], 2)
    np.testing.assert_allclose(empirical_operator(family, s[0], rw[0], theta), rw[0] + 0.9 * Z @ theta)


def test_empirical_operator_special_cases(permutation_mrp, family):
    theta = np.array([0.3, -1.0, 2.0])
    s = draw_transition(permutation_mrp, RandomSource(0, 0))
    np.testing.assert_allclose(
        empirical_operator(permutation_mrp, s, permutation_mrp.rewards, theta),
        bellman_apply(permutation_mrp, theta),
    )
    rw = np.array([0.5, -0.25])
    np.testing.assert_array_equal(empirical_operator(family, np.array([1, 1]), rw, np.zeros(2)), rw)
    with pytest.raises(MrpError):
        empirical_operator(family, np.array([0, 1]), rw, np.zeros(3))


def test_family_two_outcome_expectation(family):
    p = family.transitions[0, 0]
    theta = np.array([1.0, 2.0])
    stay = empirical_operator(family, np.array([0, 1]), family.rewards, theta)[0]
    leave = empirical_operator(family, np.array([1, 1]), family.rewards, theta)[0]
    assert p * stay + (1 - p) * leave == pytest.approx(bellman_apply(family, theta)[0], abs=1e-12)


@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.floats(0.0, 0.99))
def test_unbiased_by_enumeration(seed, d, gamma):
    rng = np.random.default_rng(seed)
    m = random_mrp(rng, d, gamma, zero_fraction=0.3)
    theta = rng.normal(size=d)
    expect = sum(prob * empirical_operator(m, s, m.rewards, theta) for s, prob in outcomes(m))
    np.testing.assert_allclose(expect, bellman_apply(m, theta), rtol=0, atol=1e-12)
