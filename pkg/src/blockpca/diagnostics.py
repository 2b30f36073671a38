"""Executable forms of the quantities driving the convergence analysis.

These functions make the analytic machinery testable: the per-block
contraction factor, the one-step error recursion and its closed form, the
concentration of a block's empirical covariance around the population
covariance, and the overlap statistics of a random initial basis. Universal
constants in the underlying probability bounds are unspecified, so the Monte
Carlo helpers report measured statistics rather than asserting constants.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OracleScaleError, ValidationError
from .linalg import jacobi_eigh, qr_decompose, sample_gaussian_matrix, spectral_norm
from .model import ORACLE_DIM_LIMIT, SpikedModel, population_covariance


def contraction_factor(sigma: float, lambda_k: float) -> float:
    """Per-block error decay base (sigma^2 + lambda_k^2/2) / (sigma^2 + 3 lambda_k^2/4).

    Always in (0, 1) for lambda_k > 0; increases toward 1 with noise and
    decreases as the weakest retained spike strengthens.
    """
    if not np.isfinite(lambda_k) or lambda_k <= 0 or lambda_k > 1:
        raise ValidationError("lambda_k must lie in (0, 1]")
    if not np.isfinite(sigma) or sigma < 0:
        raise ValidationError("sigma must be nonnegative")
    s2 = sigma * sigma
    l2 = lambda_k * lambda_k
    return (s2 + 0.5 * l2) / (s2 + 0.75 * l2)


def recursion_one_step(delta: float, gamma: float) -> float:
    """One application of the error recursion: gamma^2 d / (1 - d + gamma^2 d)."""
    if not 0.0 <= delta < 1.0:
        raise ValidationError("delta must lie in [0, 1)")
    if not 0.0 < gamma <= 1.0:
        raise ValidationError("gamma must lie in (0, 1]")
    g2 = gamma * gamma
    return g2 * delta / (1.0 - delta + g2 * delta)


def recursion_closed_form(delta0: float, gamma: float, tau: int) -> float:
    """Error bound after ``tau`` recursion steps:
    gamma^(2 tau) d0 / (1 - (1 - gamma^(2 tau)) d0)."""
    if not 0.0 <= delta0 < 1.0:
        raise ValidationError("delta0 must lie in [0, 1); delta0 = 1 is singular")
    if not 0.0 < gamma <= 1.0:
        raise ValidationError("gamma must lie in (0, 1]")
    if tau < 0:
        raise ValidationError("tau must be nonnegative")
    g = gamma ** (2 * tau)
    return g * delta0 / (1.0 - (1.0 - g) * delta0)


def covariance_deviation(samples, model: SpikedModel) -> float:
    """Spectral distance between a block's empirical covariance and the
    population covariance. Forms a dense p-by-p matrix, so it carries the
    oracle dimension guard."""
    X = np.asarray(samples, dtype=np.float64)
    if X.ndim != 2:
        raise ValidationError("samples must be a (B, p) array of rows")
    if X.shape[1] != model.p:
        raise ValidationError("sample dimension does not match the model")
    if model.p > ORACLE_DIM_LIMIT:
        raise OracleScaleError(
            f"covariance deviation is a diagnostic; p={model.p} exceeds {ORACLE_DIM_LIMIT}"
        )
    if X.shape[0] < 1:
        raise ValidationError("need at least one sample")
    F = (X.T @ X) / X.shape[0]
    return spectral_norm(F - population_covariance(model))


@dataclass(frozen=True)
class OverlapStats:
    """Quantiles of the scaled smallest singular value of U^T Q0.

    ``scaled_quantiles`` maps percentile -> quantile of
    sigma_k(U^T Q0) * sqrt(k * p) over the trials; the scaling makes values
    comparable across dimensions (the law is expected to have a
    dimension-free lower tail).
    """

    p: int
    k: int
    trials: int
    scaled_quantiles: dict


_OVERLAP_PERCENTILES = (1, 5, 25, 50, 75, 95, 99)


def initialization_overlap_stats(
    p: int, k: int, trials: int, rng: np.random.Generator
) -> OverlapStats:
    """Monte Carlo distribution of the initial overlap sigma_k(U^T Q0).

    A reference U is drawn once; each trial redraws Q0 the way the trainers
    initialize (QR of a Gaussian matrix) and records the smallest singular
    value of U^T Q0, scaled by sqrt(k p).
    """
    if trials < 100:
        raise ValidationError("need at least 100 trials for stable quantiles")
    if not 1 <= k <= p:
        raise ValidationError("need 1 <= k <= p")
    U, _ = qr_decompose(sample_gaussian_matrix(p, k, rng))
    Uc = U.columns
    scaled = np.empty(trials)
    root_kp = np.sqrt(k * p)
    for t in range(trials):
        Q0, _ = qr_decompose(sample_gaussian_matrix(p, k, rng))
        G = Uc.T @ Q0.columns
        values, _ = jacobi_eigh(G.T @ G)
        scaled[t] = np.sqrt(max(values[-1], 0.0)) * root_kp
    quantiles = {
        q: float(np.percentile(scaled, q)) for q in _OVERLAP_PERCENTILES
    }
    return OverlapStats(p=p, k=k, trials=trials, scaled_quantiles=quantiles)
