"""Rescaled Polyak-Ruppert error against the Gaussian limit on the two-state family.

Tracks sqrt(n) * mean ||theta_n - theta*||_inf for growing n, from the zero
initialization and from theta*, next to a Monte Carlo estimate of E||Z||_inf.
The gap between the two columns is the initialization transient.

    python3 scripts/asymptotic_check.py --gamma 0.9 --lam 1 --trials 100
"""

import argparse
import math

import numpy as np

from policyeval.complexity import asymptotic_covariance, gaussian_linf_expectation
from policyeval.mrp import solve_value_function, two_state_family
from policyeval.sampling import RandomSource, stream_id
from policyeval.td import StepsizeSchedule, run_td


def scaled_error(mrp, theta_star, n, trials, seed, theta0):
    sched = StepsizeSchedule.polynomial(2 / 3)
    errs = [np.abs(run_td(mrp, sched, n, RandomSource(seed, stream_id(t)), theta0=theta0).final_average
                   - theta_star).max() for t in range(trials)]
    return math.sqrt(n) * float(np.mean(errs))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--gamma", type=float, default=0.9)
    ap.add_argument("--lam", type=float, default=1.0)
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--sizes", default="10000,100000,1000000")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    m = two_state_family(args.gamma, args.lam)
    theta_star = solve_value_function(m)
    limit = gaussian_linf_expectation(asymptotic_covariance(m), 200_000, RandomSource(args.seed, 0))
    print(f"E||Z||_inf = {limit.linf_mean:.4f} +- {limit.mc_stderr:.4f}")
    print(f"{'n':>9} {'from 0':>8} {'from theta*':>11}")
    for n in (int(x) for x in args.sizes.split(",")):
        a = scaled_error(m, theta_star, n, args.trials, args.seed, None)
        b = scaled_error(m, theta_star, n, args.trials, args.seed, theta_star)
        print(f"{n:9d} {a:8.3f} {b:11.3f}")


if __name__ == "__main__":
    main()
