"""Instance-dependent complexity functionals, the local minimax lower-bound value,
the Gaussian limit of the rescaled error, and the hardest local alternative."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mrp import Mrp, MrpError, solve_value_function, span_seminorm
from .sampling import RandomSource

PSD_SLACK = 1e-10
ROUNDOFF = 64 * np.finfo(float).eps


@dataclass(frozen=True)
class ComplexityProfile:
    nu: float
    rho: float
    b: float
    span: float
    sigma_sq: np.ndarray
    # row achieving nu (smallest index on ties)
    argmax_row: int = 0


@dataclass(frozen=True)
class AsymptoticRisk:
    covariance: np.ndarray
    linf_mean: float
    mc_samples: int
    mc_stderr: float


@dataclass(frozen=True)
class HardAlternative:
    matrix: np.ndarray
    target_row: int
    chi_square: float
    sample_size: int


def sigma_diag(mrp: Mrp, theta) -> np.ndarray:
    """Per-state variances ``Var_{j ~ P_i}(theta_j)``: the diagonal of Cov((Z - P) theta).

    Off-diagonal terms vanish because rows of ``Z`` are drawn independently.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (mrp.dim,):
        raise MrpError(f"theta has shape {theta.shape}, expected ({mrp.dim},)")
    P = mrp.transitions
    mean = P @ theta
    # centered form avoids the cancellation in E[x^2] - E[x]^2
    dev = theta[None, :] - mean[:, None]
    # deviations at round-off level (e.g. a numerically constant theta*) count as zero
    dev[np.abs(dev) <= ROUNDOFF * np.abs(theta).max(initial=0.0)] = 0.0
    return np.einsum("ij,ij->i", P, dev**2)


def complexity_profile(mrp: Mrp, theta=None) -> ComplexityProfile:
    """Compute ``nu``, ``rho``, ``b`` and the span at ``theta`` (default: ``theta*``)."""
    if theta is None:
        theta = solve_value_function(mrp)
    theta = np.asarray(theta, dtype=float)
    sig = sigma_diag(mrp, theta)
    U = mrp.resolvent
    row_vars = (U**2) @ sig
    top = float(row_vars.max())
    argmax_row = int(np.flatnonzero(row_vars == top)[0])
    nu = math.sqrt(top)
    rho = mrp.reward_noise * float(np.sqrt((U**2).sum(axis=1)).max())
    span = span_seminorm(theta)
    b = span / (1.0 - mrp.discount)
    return ComplexityProfile(nu=nu, rho=rho, b=b, span=span, sigma_sq=sig, argmax_row=argmax_row)


def lower_bound_value(profile: ComplexityProfile, gamma: float, n: int) -> float:
    """Unit-constant lower-bound functional ``(gamma nu + rho) / sqrt(n)``."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return (gamma * profile.nu + profile.rho) / math.sqrt(n)


def sample_threshold_n0(mrp: Mrp, profile: ComplexityProfile) -> float:
    """``max(gamma^2/(1-gamma)^2, b^2/nu^2)``; ``inf`` when ``nu = 0 < b``."""
    g = mrp.discount
    first = g**2 / (1.0 - g) ** 2
    if profile.nu == 0.0:
        second = math.inf if profile.b > 0 else 0.0
    else:
        second = (profile.b / profile.nu) ** 2
    return max(first, second)


def asymptotic_covariance(mrp: Mrp, theta_star=None) -> np.ndarray:
    """``U (gamma^2 Sigma(theta*) + sigma_r^2 I) U^T``."""
    if theta_star is None:
        theta_star = solve_value_function(mrp)
    U = mrp.resolvent
    inner = mrp.discount**2 * sigma_diag(mrp, theta_star) + mrp.reward_noise**2
    V = (U * inner) @ U.T
    return 0.5 * (V + V.T)


def psd_factor(cov) -> np.ndarray:
    """Return ``L`` with ``L @ L.T == cov`` from a clamped symmetric eigendecomposition."""
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ValueError(f"covariance must be square, got shape {cov.shape}")
    if np.abs(cov - cov.T).max(initial=0.0) > PSD_SLACK:
        raise ValueError("covariance is not symmetric")
    w, Q = np.linalg.eigh(0.5 * (cov + cov.T))
    if w.size and w.min() < -PSD_SLACK:
        raise ValueError(f"covariance is not positive semidefinite (eigenvalue {w.min():.3e})")
    return Q * np.sqrt(np.clip(w, 0.0, None))


def gaussian_linf_expectation(cov, samples: int, rng: RandomSource, batch: int = 65536) -> AsymptoticRisk:
    """Monte Carlo estimate of ``E ||Z||_inf`` for ``Z ~ N(0, cov)``."""
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    cov = np.asarray(cov, dtype=float)
    L = psd_factor(cov)
    D = cov.shape[0]
    if not L.any():
        return AsymptoticRisk(cov, 0.0, samples, 0.0)
    norms = np.empty(samples)
    for start in range(0, samples, batch):
        stop = min(start + batch, samples)
        g = rng.aux_gen.standard_normal((stop - start, D))
        norms[start:stop] = np.abs(g @ L.T).max(axis=1)
    mean = float(np.sum(norms) / samples)
    stderr = float(np.std(norms, ddof=1) / math.sqrt(samples)) if samples > 1 else math.inf
    return AsymptoticRisk(cov, mean, samples, stderr)


def chi_square_divergence(p_from, p_to) -> float:
    """``sum_ij (P'_ij - P_ij)^2 / P_ij`` with ``0/0 = 0`` and ``inf`` on support violations.

    Accepts either :class:`Mrp` instances or raw matrices.
    """
    P = np.asarray(getattr(p_from, "transitions", p_from), dtype=float)
    Q = np.asarray(getattr(p_to, "transitions", p_to), dtype=float)
    if P.shape != Q.shape:
        raise ValueError(f"shape mismatch: {P.shape} vs {Q.shape}")
    diff = Q - P
    zero = P == 0
    if np.any(diff[zero] != 0):
        return math.inf
    return float(np.sum(diff[~zero] ** 2 / P[~zero]))


def construct_hard_alternative(mrp: Mrp, n: int) -> HardAlternative:
    """Perturb ``P`` along the direction that moves the hardest coordinate of ``theta*``.

    ``Pbar_ij = P_ij (1 + U_{l,i} (theta*_j - (P theta*)_i) / (nu sqrt(2n)))`` where ``l``
    maximizes the nu-functional.  The result is row-stochastic, has chi-square
    divergence exactly ``1/(2n)`` from ``P``, and shifts coordinate ``l`` of the
    value function by ``gamma nu / sqrt(2n)`` to first order.
    """
    theta = solve_value_function(mrp)
    profile = complexity_profile(mrp, theta)
    if profile.nu == 0.0:
        raise ValueError("nu(P, theta*) = 0: the hard alternative is undefined")
    n0 = sample_threshold_n0(mrp, profile)
    if n < n0:
        raise ValueError(f"n = {n} is below the sample threshold N0 = {n0:.6g}")
    P = mrp.transitions
    l = profile.argmax_row
    U = mrp.resolvent
    theta_bar = P @ theta
    scale = U[l, :, None] * (theta[None, :] - theta_bar[:, None]) / (profile.nu * math.sqrt(2.0 * n))
    Pbar = P + P * scale
    return HardAlternative(
        matrix=Pbar,
        target_row=l,
        chi_square=chi_square_divergence(P, Pbar),
        sample_size=int(n),
    )
