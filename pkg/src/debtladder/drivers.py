"""Correlated AR(1) drivers: maturity-specific rates and the normalized deficit.

Rates are mutually independent in the default reading (each correlated rho
with the deficit innovation), which is feasible only while K rho^2 <= 1;
a one-factor alternative that induces rho^2 cross-rate correlation sits
behind `correlation_mode: one_factor`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .config import ModelConfig
from .errors import ConfigError


@dataclass(frozen=True)
class DriverState:
    """Current rates (dense over tenors 1..M) and normalized deficit.

    Arrays may carry leading batch dimensions (one row per simulation path).
    """

    rates: np.ndarray
    deficit: np.ndarray | float


@dataclass(frozen=True)
class StationaryMoments:
    """Closed-form stationary law of the driver system (dense over tenors)."""

    rate_means: np.ndarray
    rate_stationary_sd: np.ndarray
    deficit_mean: float
    deficit_stationary_sd: float
    cross_cov: np.ndarray          # Cov(r_j, D) = rho varsigma sigma_j / (1 - phi_j psi)
    abs_rate_means: np.ndarray     # r*_j = E|r_j| under the stationary Gaussian
    innovation_cov: np.ndarray     # Sigma_j = rho varsigma sigma_j


@dataclass(frozen=True)
class DriverFactorization:
    """(K+1)x(K+1) innovation covariance over (eta, eps_j1, ..., eps_jK) and a factor L
    with L L^T = cov, ordered deficit-first; issued_idx maps columns 1..K to tenor indices."""

    mode: str
    cov: np.ndarray
    factor: np.ndarray
    issued_idx: np.ndarray


def folded_normal_mean(mu: np.ndarray, sd: np.ndarray) -> np.ndarray:
    """E|X| for X ~ N(mu, sd^2); reduces to |mu| where sd = 0."""
    mu = np.asarray(mu, dtype=float)
    sd = np.asarray(sd, dtype=float)
    out = np.abs(mu).astype(float)
    pos = sd > 0
    if np.any(pos):
        z = mu[pos] / sd[pos]
        out[pos] = mu[pos] * (1.0 - 2.0 * stats.norm.cdf(-z)) + 2.0 * sd[pos] * stats.norm.pdf(z)
    return out


def stationary_moments(config: ModelConfig) -> StationaryMoments:
    s = config.rate_vol / np.sqrt(1.0 - config.rate_persistence**2)
    varsigma_stat = config.deficit_vol / np.sqrt(1.0 - config.deficit_persistence**2)
    cross = (config.correlation * config.deficit_vol * config.rate_vol
             / (1.0 - config.rate_persistence * config.deficit_persistence))
    return StationaryMoments(
        rate_means=config.mean_rates,
        rate_stationary_sd=s,
        deficit_mean=config.deficit_mean,
        deficit_stationary_sd=float(varsigma_stat),
        cross_cov=cross,
        abs_rate_means=folded_normal_mean(config.mean_rates, s),
        innovation_cov=config.correlation * config.deficit_vol * config.rate_vol,
    )


def _psd_factor(cov: np.ndarray) -> np.ndarray:
    """A factor L with L L^T = cov. Cholesky when positive definite; otherwise
    an eigenvalue factor with tiny negative eigenvalues clipped to zero."""
    if np.count_nonzero(cov - np.diag(np.diagonal(cov))) == 0:
        return np.diag(np.sqrt(np.maximum(np.diagonal(cov), 0.0)))
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        vals, vecs = np.linalg.eigh(cov)
        floor = -1e-12 * max(1.0, float(np.max(np.abs(vals))))
        if np.any(vals < floor):
            raise ConfigError("joint innovation covariance is not positive semidefinite")
        return vecs @ np.diag(np.sqrt(np.clip(vals, 0.0, None)))


def build_joint_covariance(config: ModelConfig) -> DriverFactorization:
    """Assemble and factor the innovation covariance of (eta, eps over issued tenors).

    In `independent` mode the matrix is PSD iff K_eff rho^2 <= 1 where K_eff
    counts issued tenors with positive vol; violations raise a ConfigError
    naming the bound.
    """
    issued = np.flatnonzero(config.issued_mask)
    sigma = config.rate_vol[issued]
    rho = config.correlation
    varsigma = config.deficit_vol
    k = issued.size

    cov = np.zeros((k + 1, k + 1))
    cov[0, 0] = varsigma**2
    cov[0, 1:] = cov[1:, 0] = rho * varsigma * sigma

    if config.correlation_mode == "independent":
        cov[1:, 1:] = np.diag(sigma**2)
        k_eff = int(np.count_nonzero(sigma > 0)) if varsigma > 0 else 0
        if k_eff and rho**2 * k_eff > 1.0 + 1e-15:
            raise ConfigError(
                f"rate-deficit correlation infeasible under mutually independent rates: "
                f"K rho^2 = {k_eff} * {rho}^2 = {k_eff * rho**2:.6g} > 1 "
                f"(use correlation_mode: one_factor or |rho| <= {1.0 / np.sqrt(k_eff):.6g})")
        factor = _psd_factor(cov)
    else:  # one_factor: eps_j = sigma_j (rho Z0 + sqrt(1-rho^2) Z_j), eta = varsigma Z0
        cov[1:, 1:] = rho**2 * np.outer(sigma, sigma)
        cov[np.arange(1, k + 1), np.arange(1, k + 1)] = sigma**2
        factor = np.zeros((k + 1, k + 1))
        factor[0, 0] = varsigma
        factor[1:, 0] = rho * sigma
        factor[np.arange(1, k + 1), np.arange(1, k + 1)] = np.sqrt(1.0 - rho**2) * sigma

    cov.setflags(write=False)
    factor.setflags(write=False)
    return DriverFactorization(mode=config.correlation_mode, cov=cov, factor=factor,
                               issued_idx=issued)


def initial_driver_state(config: ModelConfig, paths: int | None = None) -> DriverState:
    """Drivers at their stationary means (the default chain start)."""
    if paths is None:
        return DriverState(rates=config.mean_rates.copy(), deficit=config.deficit_mean)
    return DriverState(rates=np.tile(config.mean_rates, (paths, 1)),
                       deficit=np.full(paths, config.deficit_mean))


def step_drivers(
    state: DriverState,
    gaussians: np.ndarray,
    config: ModelConfig,
    factorization: DriverFactorization,
) -> DriverState:
    """One AR(1) step: r' = r_bar + phi (r - r_bar) + eps, D' = D0 + psi (D - D0) + eta.

    `gaussians` must be i.i.d. standard normals of shape (..., K+1) from the
    caller's stream; (eta, eps) = L gaussians. Non-issued tenors carry no
    innovation and simply mean-revert.
    """
    g = np.asarray(gaussians, dtype=float)
    k = factorization.issued_idx.size
    if g.shape[-1] != k + 1:
        raise ConfigError(f"gaussians must have last dimension {k + 1}, got {g.shape[-1]}")

    innov = g @ factorization.factor.T
    rates = config.mean_rates + config.rate_persistence * (state.rates - config.mean_rates)
    rates = np.array(rates, dtype=float, copy=True)
    rates[..., factorization.issued_idx] += innov[..., 1:]
    deficit = (config.deficit_mean
               + config.deficit_persistence * (np.asarray(state.deficit) - config.deficit_mean)
               + innov[..., 0])
    if deficit.ndim == 0:
        deficit = float(deficit)
    return DriverState(rates=rates, deficit=deficit)
