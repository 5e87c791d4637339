"""Command-line entry point: ``policyeval <subcommand> ...``.

Exit codes: 0 on success, 2 on validation errors, 3 on I/O errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import harness
from .complexity import (
    asymptotic_covariance,
    complexity_profile,
    construct_hard_alternative,
    gaussian_linf_expectation,
    lower_bound_value,
    sample_threshold_n0,
)
from .mrp import Mrp, MrpError, load_mrp, save_mrp, solve_value_function
from .sampling import RandomSource, default_seed, stream_id
from .td import StepsizeSchedule, run_td
from .vrpe import BUDGETED, PAPER_CONSTANTS, BudgetError, check_epoch_length, run_vrpe, vrpe_parameters

EXIT_VALIDATION = 2
EXIT_IO = 3


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def _dump(obj) -> None:
    print(json.dumps({k: _jsonable(v) for k, v in obj.items()}, indent=2))


def _load_theta(path, dim: int) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = data.get("values", data.get("theta"))
    theta = np.asarray(data, dtype=float)
    if theta.shape != (dim,):
        raise MrpError(f"theta file holds shape {theta.shape}, expected ({dim},)")
    return theta


def cmd_solve(args) -> None:
    mrp = load_mrp(args.mrp)
    _dump({"theta_star": solve_value_function(mrp).tolist()})


def cmd_complexity(args) -> None:
    mrp = load_mrp(args.mrp)
    theta = _load_theta(args.theta, mrp.dim) if args.theta else solve_value_function(mrp)
    prof = complexity_profile(mrp, theta)
    risk = gaussian_linf_expectation(
        asymptotic_covariance(mrp, theta), args.mc_samples, RandomSource(args.seed, 0)
    )
    _dump({
        "nu": prof.nu,
        "rho": prof.rho,
        "b": prof.b,
        "span": prof.span,
        "n0": sample_threshold_n0(mrp, prof),
        "n": args.n,
        "unit_constant_lower_bound": lower_bound_value(prof, mrp.discount, args.n),
        "expected_linf_gaussian": risk.linf_mean,
        "expected_linf_gaussian_stderr": risk.mc_stderr,
        "mc_samples": risk.mc_samples,
    })


def cmd_hard_alt(args) -> None:
    mrp = load_mrp(args.mrp)
    alt = construct_hard_alternative(mrp, args.n)
    out = Mrp(alt.matrix.clip(min=0.0), mrp.rewards, mrp.discount, mrp.reward_noise)
    if args.out:
        save_mrp(out, args.out)
    else:
        print(json.dumps(out.to_dict(), indent=2))
    print(f"target_row={alt.target_row} chi_square={alt.chi_square!r} n={alt.sample_size}", file=sys.stderr)


def cmd_evaluate(args) -> None:
    mrp = load_mrp(args.mrp)
    theta_star = solve_value_function(mrp)
    schedule = StepsizeSchedule.parse(args.stepsize, mrp.discount)
    if args.algo == "td":
        print("trial,linf_iterate,linf_average")
        for t in range(args.trials):
            traj = run_td(mrp, schedule, args.n, RandomSource(args.seed, stream_id(t)))
            e_it = float(np.abs(traj.final_iterate - theta_star).max())
            e_avg = float(np.abs(traj.final_average - theta_star).max())
            print(f"{t},{e_it!r},{e_avg!r}")
        return
    mode = PAPER_CONSTANTS if args.mode in ("paper", PAPER_CONSTANTS) else BUDGETED
    config = vrpe_parameters(args.n, mrp.dim, args.delta, mrp.discount, schedule, mode)
    header = config.to_dict()
    report = check_epoch_length(config, mrp.dim, args.n, mrp.discount)
    header["sample_condition"] = {"threshold": report.threshold, "epoch_length": report.epoch_length,
                                  "passed": report.passed, **report.notes}
    print("# " + json.dumps(header))
    print("trial,linf_error")
    for t in range(args.trials):
        est = run_vrpe(mrp, config, RandomSource(args.seed, stream_id(t)))
        print(f"{t},{float(np.abs(est - theta_star).max())!r}")


def _ideal_or_none(lam, exponent):
    if lam is None or exponent is None:
        return None
    return harness.ideal_slope(lam, exponent)


def cmd_experiment(args) -> None:
    gammas = tuple(float(g) for g in args.gammas.split(","))
    spec = harness.ExperimentSpec(
        lam=args.lam,
        gamma_grid=gammas,
        sample_exponent=args.exponent,
        algorithm=args.algo,
        stepsize=args.stepsize,
        trials=args.trials,
        master_seed=args.seed,
        delta=args.delta,
        budget_mode=PAPER_CONSTANTS if args.mode in ("paper", PAPER_CONSTANTS) else BUDGETED,
    )
    results = harness.run_experiment(spec, workers=args.workers)
    fit = harness.fit_results(results)
    ideal = harness.ideal_slope(args.lam, args.exponent)
    harness.emit_csv(results, fit, ideal, args.out)
    _dump({
        "out": str(args.out),
        "slope": fit.slope if fit else None,
        "ideal_slope": ideal,
        "slope_gap": abs(fit.slope - ideal) if fit else None,
        "r_squared": fit.r_squared if fit else None,
    })


def cmd_slopes(args) -> None:
    results = harness.read_trials(args.trials_csv)
    fit = harness.fit_results(results)
    if fit is None:
        raise ValueError("slope fit needs at least two distinct discounts")
    lam = args.lam if args.lam is not None else results[0].lam
    ideal = _ideal_or_none(lam, args.exponent)
    _dump({
        "slope": fit.slope,
        "intercept": fit.intercept,
        "r_squared": fit.r_squared,
        "ideal_slope": ideal,
        "slope_gap": abs(fit.slope - ideal) if ideal is not None else None,
    })


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="policyeval", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def seed_arg(sp):
        sp.add_argument("--seed", type=int, default=None,
                        help="master seed (falls back to $POLICYEVAL_SEED, then 0)")

    sp = sub.add_parser("solve", help="exact value function")
    sp.add_argument("--mrp", required=True)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("complexity", help="complexity functionals and lower-bound values")
    sp.add_argument("--mrp", required=True)
    sp.add_argument("--theta")
    sp.add_argument("--n", type=int, default=1)
    sp.add_argument("--mc-samples", type=int, default=100_000)
    seed_arg(sp)
    sp.set_defaults(func=cmd_complexity)

    sp = sub.add_parser("hard-alt", help="write the hardest local alternative as MRP JSON")
    sp.add_argument("--mrp", required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_hard_alt)

    sp = sub.add_parser("evaluate", help="per-trial errors of TD or VRPE on an MRP file")
    sp.add_argument("--algo", choices=["td", "vrpe"], required=True)
    sp.add_argument("--stepsize", required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--delta", type=float, default=harness.DEFAULT_DELTA)
    sp.add_argument("--mode", choices=["budgeted", "paper"], default="budgeted")
    sp.add_argument("--mrp", required=True)
    sp.add_argument("--trials", type=int, default=1)
    seed_arg(sp)
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("experiment", help="discount sweep over the two-state family")
    sp.add_argument("--lambda", dest="lam", type=float, required=True)
    sp.add_argument("--exponent", type=int, choices=[2, 3], default=3)
    sp.add_argument("--algo", choices=[harness.TD_PR, harness.VRPE], default=harness.VRPE)
    sp.add_argument("--stepsize", default="rlin")
    sp.add_argument("--gammas", default=",".join(str(g) for g in harness.DEFAULT_GAMMAS))
    sp.add_argument("--trials", type=int, default=harness.DEFAULT_TRIALS)
    sp.add_argument("--delta", type=float, default=harness.DEFAULT_DELTA)
    sp.add_argument("--mode", choices=["budgeted", "paper"], default="budgeted")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--out", required=True)
    seed_arg(sp)
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("slopes", help="refit the log-log slope from a trials CSV")
    sp.add_argument("trials_csv")
    sp.add_argument("--lambda", dest="lam", type=float)
    sp.add_argument("--exponent", type=int, choices=[2, 3])
    sp.set_defaults(func=cmd_slopes)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "seed", 0) is None:
        args.seed = default_seed()
    try:
        args.func(args)
    except (MrpError, BudgetError, ValueError, KeyError, harness.TrialError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
