"""Monte Carlo experiments over the two-state family and log-log slope regression."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .mrp import Mrp, sample_size_rule, solve_value_function, two_state_family
from .sampling import RandomSource, stream_id
from .td import StepsizeSchedule, run_td
from .vrpe import BUDGETED, run_vrpe, vrpe_parameters

TD_PR = "td_pr"
VRPE = "vrpe"
DEFAULT_GAMMAS = (0.75, 0.80, 0.85, 0.90, 0.93)
DEFAULT_TRIALS = 200
DEFAULT_DELTA = 0.1

SUMMARY_HEADER = ["gamma", "lambda", "n", "algo", "mean_linf", "stderr", "ln_inv_gap", "ln_mean_linf"]
TRIAL_HEADER = ["gamma", "lambda", "n", "algo", "trial", "master_seed", "stream_id", "linf_error"]
FIT_HEADER = ["slope", "intercept", "r_squared", "ideal_slope", "slope_gap"]


@dataclass(frozen=True)
class ExperimentSpec:
    """A sweep over the discount grid for one ``lambda``.

    ``stepsize`` uses the CLI syntax (``rlin``, ``poly:w``, ``constant:a``) and is
    resolved per discount, since two of the schedules depend on it.
    """

    lam: float
    gamma_grid: tuple = DEFAULT_GAMMAS
    sample_exponent: int = 3
    algorithm: str = VRPE
    stepsize: str = "rlin"
    trials: int = DEFAULT_TRIALS
    master_seed: int = 0
    delta: float = DEFAULT_DELTA
    budget_mode: str = BUDGETED

    def __post_init__(self):
        grid = tuple(float(g) for g in self.gamma_grid)
        object.__setattr__(self, "gamma_grid", grid)
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not grid or any(not 0.25 < g < 1.0 for g in grid):
            raise ValueError(f"discounts must lie in (1/4, 1), got {grid}")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError(f"discount grid must be strictly increasing, got {grid}")
        if self.sample_exponent not in (2, 3):
            raise ValueError("sample_exponent must be 2 or 3")
        if self.algorithm not in (TD_PR, VRPE):
            raise ValueError(f"algorithm must be {TD_PR!r} or {VRPE!r}")

    def schedule(self, gamma: float) -> StepsizeSchedule:
        return StepsizeSchedule.parse(self.stepsize, gamma)


@dataclass(frozen=True)
class TrialResult:
    gamma: float
    lam: float
    sample_size: int
    algorithm: str
    trial: int
    linf_error: float
    master_seed: int
    stream_id: int


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    r_squared: float
    points: list = field(default_factory=list)


class TrialError(RuntimeError):
    pass


def ideal_slope(lam: float, sample_exponent: int) -> float:
    """Predicted log-log slope of error versus ``1/(1-gamma)``: ``1/2 - lambda`` or ``-lambda``."""
    if sample_exponent == 2:
        return 0.5 - lam
    if sample_exponent == 3:
        return -lam
    raise ValueError(f"sample_exponent must be 2 or 3, got {sample_exponent}")


def estimate(mrp: Mrp, algorithm: str, schedule: StepsizeSchedule, n: int, rng: RandomSource,
             delta: float = DEFAULT_DELTA, budget_mode: str = BUDGETED) -> np.ndarray:
    """Run one algorithm with a budget of ``n`` samples and return its estimate."""
    if algorithm == TD_PR:
        return run_td(mrp, schedule, n, rng).final_average
    if algorithm == VRPE:
        config = vrpe_parameters(n, mrp.dim, delta, mrp.discount, schedule, budget_mode)
        return run_vrpe(mrp, config, rng)
    raise ValueError(f"unknown algorithm {algorithm!r}")


def _run_point(spec: ExperimentSpec, index: int, trials) -> list:
    gamma = spec.gamma_grid[index]
    mrp = two_state_family(gamma, spec.lam)
    theta_star = solve_value_function(mrp)
    n = sample_size_rule(gamma, spec.sample_exponent)
    schedule = spec.schedule(gamma)
    out = []
    for t in trials:
        sid = stream_id(t, index)
        rng = RandomSource(spec.master_seed, sid)
        try:
            est = estimate(mrp, spec.algorithm, schedule, n, rng, spec.delta, spec.budget_mode)
        except Exception as exc:
            raise TrialError(f"gamma={gamma}, trial={t}: {exc}") from exc
        err = float(np.abs(est - theta_star).max())
        out.append(TrialResult(gamma, spec.lam, n, spec.algorithm, t, err, spec.master_seed, sid))
    return out


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> list:
    """All trials for every discount in the grid, ordered by (grid index, trial).

    Each trial draws from its own stream ``stream_id(trial, grid_index)``, so
    results do not depend on ``workers`` or completion order.
    """
    jobs = [(i, range(spec.trials)) for i in range(len(spec.gamma_grid))]
    if workers <= 1:
        chunks = [_run_point(spec, i, trials) for i, trials in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_point, spec, i, trials) for i, trials in jobs]
            chunks = [f.result() for f in futures]
    return [r for chunk in chunks for r in chunk]


def fit_slope(points) -> SlopeFit:
    """Ordinary least squares ``y = slope * x + intercept``."""
    pts = [(float(x), float(y)) for x, y in points]
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    if len(pts) < 2 or np.ptp(x) == 0.0:
        raise ValueError("slope fit needs at least two distinct x values")
    xc = x - x.mean()
    yc = y - y.mean()
    slope = float(xc @ yc / (xc @ xc))
    intercept = float(y.mean() - slope * x.mean())
    ss_tot = float(yc @ yc)
    resid = y - (slope * x + intercept)
    ss_res = float(resid @ resid)
    r2 = 1.0 if ss_tot == 0.0 else min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return SlopeFit(slope, intercept, r2, pts)


@dataclass(frozen=True)
class SummaryRow:
    gamma: float
    lam: float
    sample_size: int
    algorithm: str
    mean_linf: float
    stderr: float

    @property
    def ln_inv_gap(self) -> float:
        return math.log(1.0 / (1.0 - self.gamma))

    @property
    def ln_mean_linf(self) -> float:
        return math.log(self.mean_linf) if self.mean_linf > 0 else -math.inf


def summarize(results) -> list:
    """Per-discount mean error and its standard error, in first-appearance order."""
    groups: dict = {}
    for r in results:
        groups.setdefault((r.gamma, r.lam, r.sample_size, r.algorithm), []).append(r.linf_error)
    rows = []
    for (gamma, lam, n, algo), errs in groups.items():
        e = np.array(errs)
        se = float(e.std(ddof=1) / math.sqrt(len(e))) if len(e) > 1 else 0.0
        rows.append(SummaryRow(gamma, lam, n, algo, float(e.mean()), se))
    return rows


def fit_results(results) -> SlopeFit | None:
    rows = summarize(results)
    if len({r.gamma for r in rows}) < 2:
        return None
    return fit_slope([(r.ln_inv_gap, r.ln_mean_linf) for r in rows])


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_csv(results, fit: SlopeFit | None, ideal: float | None, sink) -> dict:
    """Write ``trials.csv``, ``summary.csv`` and ``fit.csv`` under directory ``sink``.

    Floats are written with ``repr`` so output is byte-stable.  When fewer than two
    discounts are present, the fit row is written with empty fields.
    """
    results = list(results)
    if not results:
        raise ValueError("no results to write")
    out = Path(sink)
    out.mkdir(parents=True, exist_ok=True)
    paths = {name: out / f"{name}.csv" for name in ("trials", "summary", "fit")}

    with open(paths["trials"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRIAL_HEADER)
        for r in results:
            w.writerow([_fmt(v) for v in (r.gamma, r.lam, r.sample_size, r.algorithm, r.trial,
                                           r.master_seed, r.stream_id, r.linf_error)])

    with open(paths["summary"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for s in summarize(results):
            w.writerow([_fmt(v) for v in (s.gamma, s.lam, s.sample_size, s.algorithm, s.mean_linf,
                                           s.stderr, s.ln_inv_gap, s.ln_mean_linf)])

    with open(paths["fit"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FIT_HEADER)
        if fit is None:
            w.writerow(["", "", "", "" if ideal is None else _fmt(float(ideal)), ""])
        else:
            gap = "" if ideal is None else _fmt(abs(fit.slope - ideal))
            w.writerow([_fmt(fit.slope), _fmt(fit.intercept), _fmt(fit.r_squared),
                        "" if ideal is None else _fmt(float(ideal)), gap])
    return paths


def read_trials(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        return [
            TrialResult(
                gamma=float(row["gamma"]),
                lam=float(row["lambda"]),
                sample_size=int(row["n"]),
                algorithm=row["algo"],
                trial=int(row["trial"]),
                linf_error=float(row["linf_error"]),
                master_seed=int(row["master_seed"]),
                stream_id=int(row["stream_id"]),
            )
            for row in csv.DictReader(fh)
        ]
