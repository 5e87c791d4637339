import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from policyeval.complexity import asymptotic_covariance, gaussian_linf_expectation
from policyeval.mrp import Mrp, bellman_apply, random_mrp, solve_value_function, two_state_family
from policyeval.sampling import RandomSource, stream_id
from policyeval.td import StepsizeSchedule, run_td, stepsize_at, td_step


def test_stepsize_examples():
    assert stepsize_at(StepsizeSchedule.recentered_linear(0.9), 1) == pytest.approx(1 / 1.1)
    assert stepsize_at(StepsizeSchedule.polynomial(2 / 3), 8) == pytest.approx(0.25, rel=1e-14)
    const = StepsizeSchedule.constant(0.1)
    assert all(stepsize_at(const, k) == 0.1 for k in (1, 7, 10**6))
    with pytest.raises(ValueError):
        stepsize_at(const, 0)


@pytest.mark.parametrize("kind, value", [("constant", 0.0), ("constant", 1.5), ("polynomial", 1.0),
                                         ("polynomial", 0.0), ("recentered_linear", 1.0), ("cubic", 0.5)])
def test_schedule_validation(kind, value):
    with pytest.raises(ValueError):
        StepsizeSchedule(kind, value)


def test_parse():
    assert StepsizeSchedule.parse("rlin", 0.9) == StepsizeSchedule.recentered_linear(0.9)
    assert StepsizeSchedule.parse("poly:0.75", 0.9) == StepsizeSchedule.polynomial(0.75)
    assert StepsizeSchedule.parse("poly", 0.9).value == pytest.approx(2 / 3)
    assert StepsizeSchedule.parse("constant", 0.9).value == pytest.approx(0.1 * 0.01)
    assert StepsizeSchedule.parse("constant:0.2", 0.9).value == 0.2
    with pytest.raises(ValueError):
        StepsizeSchedule.parse("adam", 0.9)


@pytest.mark.parametrize(
    "schedule",
    [StepsizeSchedule.constant(0.3), StepsizeSchedule.polynomial(2 / 3),
     StepsizeSchedule.polynomial(0.1), StepsizeSchedule.polynomial(0.95),
     StepsizeSchedule.recentered_linear(0.9), StepsizeSchedule.recentered_linear(0.0)],
)
def test_stepsize_condition_sweep(schedule):
    a = schedule.sequence(1, 10**6 + 2)
    assert np.all((a > 0) & (a <= 1))
    assert np.all((1 - a[1:]) * a[:-1] <= a[1:] * (1 + 1e-15))


def test_td_step_noiseless_full_step(permutation_mrp):
    theta = np.array([0.5, 1.0, -1.0])
    out = td_step(permutation_mrp, theta, 1.0, RandomSource(0, 0))
    np.testing.assert_allclose(out, bellman_apply(permutation_mrp, theta))


def test_td_step_discount_free():
    m = Mrp(np.full((3, 3), 1 / 3), [1.0, 2.0, 3.0], 0.0)
    np.testing.assert_array_equal(td_step(m, np.array([5.0, 5.0, 5.0]), 1.0, RandomSource(0, 0)), m.rewards)


def test_scalar_recursion_oracle():
    gamma, alpha, r = 0.8, 0.3, 2.0
    m = Mrp([[1.0]], [r], gamma)
    theta_star = r / (1 - gamma)
    traj = run_td(m, StepsizeSchedule.constant(alpha), 40, RandomSource(0, 0), theta0=[1.0], trace=True)
    k = np.arange(1, 42)
    expected = theta_star + (1 - alpha * (1 - gamma)) ** (k - 1) * (1.0 - theta_star)
    np.testing.assert_allclose(traj.iterates[:, 0], expected, rtol=1e-12)


def test_single_step_average_is_initial_point(family):
    theta0 = np.array([3.0, -1.0])
    traj = run_td(family, StepsizeSchedule.polynomial(), 1, RandomSource(0, 0), theta0=theta0)
    np.testing.assert_array_equal(traj.final_average, theta0)
    assert traj.steps == 1


def test_sample_count(family):
    rng = RandomSource(0, 0)
    run_td(family, StepsizeSchedule.recentered_linear(0.9), 12345, rng)
    assert rng.samples == 12345


def test_noiseless_contraction(permutation_mrp):
    m = permutation_mrp
    theta_star = solve_value_function(m)
    sched = StepsizeSchedule.recentered_linear(m.discount)
    traj = run_td(m, sched, 200, RandomSource(0, 0), theta0=np.zeros(3), trace=True)
    errs = np.abs(traj.iterates - theta_star).max(axis=1)
    alphas = sched.sequence(1, 201)
    assert np.all(errs[1:] <= (1 - alphas * (1 - m.discount)) * errs[:-1] + 1e-12)
    assert np.all(np.diff(errs) <= 1e-12)


@given(st.integers(0, 2**32 - 1), st.integers(1, 1000),
       st.sampled_from(["constant:0.05", "poly:0.6", "rlin"]))
def test_running_average_matches_stored_iterates(seed, n, step):
    m = random_mrp(np.random.default_rng(seed), 3, 0.9, reward_noise=0.5)
    sched = StepsizeSchedule.parse(step, 0.9)
    traj = run_td(m, sched, n, RandomSource(seed, 1), trace=True)
    np.testing.assert_allclose(traj.final_average, traj.iterates[:n].mean(axis=0), atol=1e-10, rtol=0)
    np.testing.assert_array_equal(traj.final_iterate, traj.iterates[n])


def test_block_boundaries_do_not_matter(family):
    # the same stream consumed in one go or step by step gives the same iterate
    sched = StepsizeSchedule.polynomial()
    a = run_td(family, sched, 20_000, RandomSource(4, 0))
    rng = RandomSource(4, 0)
    theta = np.zeros(2)
    for k in range(1, 20_001):
        theta = td_step(family, theta, stepsize_at(sched, k), rng)
    np.testing.assert_allclose(a.final_iterate, theta, rtol=1e-12)


@pytest.mark.slow
def test_pr_average_reaches_gaussian_limit():
    m = two_state_family(0.9, 1.0)
    theta_star = solve_value_function(m)
    n, trials = 100_000, 100
    errs = [np.abs(run_td(m, StepsizeSchedule.polynomial(2 / 3), n, RandomSource(0, stream_id(t))).final_average
                   - theta_star).max() for t in range(trials)]
    limit = gaussian_linf_expectation(asymptotic_covariance(m), 100_000, RandomSource(1, 0)).linf_mean
    assert abs(math.sqrt(n) * np.mean(errs) - limit) <= 0.35 * limit


def test_pr_fluctuations_match_gaussian_limit_from_fixed_point():
    # no initialization transient: only the fluctuation scale is checked
    m = two_state_family(0.9, 1.0)
    theta_star = solve_value_function(m)
    n, trials = 50_000, 40
    errs = [np.abs(run_td(m, StepsizeSchedule.polynomial(2 / 3), n, RandomSource(9, stream_id(t)),
                          theta0=theta_star).final_average - theta_star).max() for t in range(trials)]
    limit = gaussian_linf_expectation(asymptotic_covariance(m), 100_000, RandomSource(1, 0)).linf_mean
    assert abs(math.sqrt(n) * np.mean(errs) - limit) <= 0.35 * limit
