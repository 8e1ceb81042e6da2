"""Invariant-distribution analytics: mean state, metrics, certificate, covariance.

The expected companion (I - E B)^-1 is inverted by the Sherman-Morrison
rank-one identity, with gamma^-1 h2^T R'(r) f = Phi(r) collapsing every
inner product to a feedback evaluation. The dense solve runs alongside as a
self-check and the two must agree to 1e-10 relative.

Second moments treat the recurrence coefficients as i.i.d. draws from the
drivers' stationary law, which is the only closure under which the state
covariance solves a finite Lyapunov equation: the i.i.d.-fied model is
self-consistent (its own mean uses the stationary level covariance of
(r, D)) and is exact whenever persistence is zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from .cashflow import issuance_column
from .config import ModelConfig
from .deterministic import feedback_phi, steady_shares
from .drivers import stationary_moments
from .errors import (CriticalFeedbackError, InternalInconsistencyError, NotErgodicError,
                     SecondMomentUnavailableError)
from .operators import LadderOperators, build_operators, coupon_stream

POWER_TOL = 1e-12
POWER_MAX_ITER = 100_000


def expected_companion(config: ModelConfig,
                       ops: LadderOperators | None = None) -> tuple[np.ndarray, np.ndarray]:
    """(E(B), E(d)): mean companion and mean forcing.

    E(B) uses the mean rates; E(d) carries the correlation correction
    r_bar + Sigma/D0 in its coupon block, Sigma_j = rho varsigma sigma_j
    (the innovation covariance between the deficit and rate j).
    """
    ops = ops or build_operators(config.growth_factor, config.max_maturity)
    mean_col = issuance_column(config.mean_rates, config)
    eb = (ops.doubled_shift + np.outer(mean_col, ops.selector)) / config.growth_factor
    sigma_over_d0 = (config.correlation * config.deficit_vol * config.rate_vol
                     / config.deficit_mean)
    ed = config.deficit_mean * issuance_column(config.mean_rates + sigma_over_d0, config)
    return eb, ed


@dataclass(frozen=True)
class CertificateResult:
    """Numerical ergodicity certificate: both tests must clear 1."""

    phi_abs: float              # Phi(gamma, E|r|, f)
    spectral_radius: float      # rho of the absolute expected companion
    ergodic: bool
    converged: bool
    iterations: int


def _power_iteration(matrix: np.ndarray, tol: float = POWER_TOL,
                     max_iter: int = POWER_MAX_ITER) -> tuple[float, bool, int]:
    """Perron root of a nonnegative matrix by power iteration on A + I.

    The shift breaks the modulus ties of near-periodic companions (an almost
    single-tenor ladder cycles mass around the diagonal, so A has several
    eigenvalues of maximal modulus and plain iteration oscillates forever);
    rho(A + I) = rho(A) + 1 with a strictly dominant root, so the shifted
    iteration always converges linearly. Restarts from a fresh seeded
    positive vector on stagnation rather than deflating.
    """
    n = matrix.shape[0]
    rng = np.random.default_rng(0)
    x = np.full(n, 1.0 / np.sqrt(n))
    lam_old = np.inf
    total = 0
    restarts = 0
    while total < max_iter:
        y = matrix @ x + x
        norm = float(np.linalg.norm(y))
        total += 1
        if norm == 0.0:
            return 0.0, True, total  # unreachable for x > 0; kept as a guard
        lam = norm  # ||(A + I) x|| with ||x|| = 1
        x = y / norm
        if abs(lam - lam_old) <= tol * max(1.0, lam):
            return max(lam - 1.0, 0.0), True, total
        lam_old = lam
        if total % 20_000 == 0 and restarts < 4:
            x = rng.random(n) + 0.5
            x /= np.linalg.norm(x)
            lam_old = np.inf
            restarts += 1
    return max(lam_old - 1.0, 0.0) if np.isfinite(lam_old) else 0.0, False, total


def ergodicity_certificate(config: ModelConfig) -> CertificateResult:
    """Phi(gamma, r*, f) and rho(E|B|), both required below 1.

    E|B| is the dominating companion built from the folded-normal means r*:
    entrywise at least the literal elementwise expectation of |B|, so its
    spectral radius below 1 certifies the drift condition.
    """
    ops = build_operators(config.growth_factor, config.max_maturity)
    moments = stationary_moments(config)
    phi_abs = feedback_phi(config, moments.abs_rate_means)
    abs_col = issuance_column(moments.abs_rate_means, config)
    abs_companion = (ops.doubled_shift + np.outer(abs_col, ops.selector)) / config.growth_factor
    radius, converged, iters = _power_iteration(abs_companion)
    return CertificateResult(
        phi_abs=float(phi_abs),
        spectral_radius=float(radius),
        ergodic=bool(converged and phi_abs < 1.0 and radius < 1.0),
        converged=converged,
        iterations=iters,
    )


def invariant_mean_state(config: ModelConfig,
                         certificate: CertificateResult | None = None) -> np.ndarray:
    """E(Y) in R^(2M): rank-one closed form, verified against the dense solve.

    Closed form: E(Y) = D0 [ T' R'_Sigma f + Phi(r_Sigma)/(1 - Phi(r_bar)) T' R'_bar f ]
    with r_Sigma = r_bar + Sigma/D0.
    """
    cert = certificate or ergodicity_certificate(config)
    if not cert.ergodic:
        raise NotErgodicError(
            f"certificate fails: phi_abs={cert.phi_abs:.6g}, "
            f"spectral_radius={cert.spectral_radius:.6g}")
    phi_mean = feedback_phi(config)
    if phi_mean >= 1.0:
        raise CriticalFeedbackError(f"Phi(r_bar) = {phi_mean:.6g} >= 1: rank-one closed form inapplicable")

    ops = build_operators(config.growth_factor, config.max_maturity)
    sigma_over_d0 = (config.correlation * config.deficit_vol * config.rate_vol
                     / config.deficit_mean)
    r_sigma = config.mean_rates + sigma_over_d0
    phi_sigma = feedback_phi(config, r_sigma)

    t = ops.discount_toeplitz
    col_sigma = issuance_column(r_sigma, config)
    col_mean = issuance_column(config.mean_rates, config)
    m = config.max_maturity

    def t_doubled(vec: np.ndarray) -> np.ndarray:
        return np.concatenate([t @ vec[:m], t @ vec[m:]])

    closed = config.deficit_mean * (
        t_doubled(col_sigma) + (phi_sigma / (1.0 - phi_mean)) * t_doubled(col_mean))

    eb, ed = expected_companion(config, ops)
    direct = np.linalg.solve(np.eye(2 * m) - eb, ed)
    scale = max(1.0, float(np.max(np.abs(direct))))
    if float(np.max(np.abs(closed - direct))) > 1e-10 * scale:
        raise InternalInconsistencyError(
            "Sherman-Morrison closed form and dense solve disagree beyond 1e-10")
    return closed


@dataclass(frozen=True)
class InvariantReport:
    """Closed-form invariant moments plus the ergodicity certificate."""

    phi_mean: float
    phi_abs: float
    spectral_radius: float
    ergodic: bool
    mean_state: np.ndarray
    q_mean: np.ndarray
    total_debt: float
    next_interest: float
    cost_ratio: float
    shares: np.ndarray
    rollover: float
    correlation_factor: float
    near_critical: bool


def invariant_metrics(config: ModelConfig) -> InvariantReport:
    """All first-moment invariant metrics.

    total_debt equals correlation_factor times the zero-correlation debt
    level exactly (the factor is 1 + gamma^-1 h^T U diag(Sigma/D0) f; the
    gamma^-1 is required for consistency with the rank-one inverse, and the
    identity is asserted at machine precision).
    """
    cert = ergodicity_certificate(config)
    mean_state = invariant_mean_state(config, cert)  # raises when not ergodic
    m = config.max_maturity
    phi_mean = feedback_phi(config)

    q_mean = mean_state[:m]
    total = float(q_mean.sum())
    interest = float(mean_state[m])

    sigma_over_d0 = (config.correlation * config.deficit_vol * config.rate_vol
                     / config.deficit_mean)
    ops = build_operators(config.growth_factor, config.max_maturity)
    factor = 1.0 + float(
        ops.discount_row @ coupon_stream(sigma_over_d0, config.allocation)) / config.growth_factor

    base_total = config.deficit_mean / (1.0 - phi_mean) * float(
        (ops.discount_toeplitz @ config.allocation).sum())
    if abs(total - factor * base_total) > 1e-9 * max(1.0, abs(total)):
        raise InternalInconsistencyError("correlation-factor identity violated")

    shares = steady_shares(config, ops)
    return InvariantReport(
        phi_mean=float(phi_mean),
        phi_abs=cert.phi_abs,
        spectral_radius=cert.spectral_radius,
        ergodic=cert.ergodic,
        mean_state=mean_state,
        q_mean=q_mean,
        total_debt=total,
        next_interest=interest,
        cost_ratio=interest / total,
        shares=shares,
        rollover=float(shares[0]),
        correlation_factor=factor,
        near_critical=abs(phi_mean - 1.0) <= 1e-6,
    )


# ---------------------------------------------------------------------------
# Second moments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InvariantCovariance:
    """Stationary covariance of the centered state under the i.i.d.-fied law."""

    covariance: np.ndarray          # C = E(Z Z^T), 2M x 2M
    innovation_cov: np.ndarray      # G_xi
    mean_state: np.ndarray          # self-consistent mean of the i.i.d.-fied model
    second_moment_radius: float     # spectral radius of X -> E(B X B^T)
    method: str


def _stationary_joint_law(config: ModelConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Mean and covariance of V = (D, r over issued tenors) under the stationary law."""
    issued = np.flatnonzero(config.issued_mask)
    phi = config.rate_persistence[issued]
    sigma = config.rate_vol[issued]
    psi = config.deficit_persistence
    s2 = sigma**2 / (1.0 - phi**2)
    cross = config.correlation * config.deficit_vol * sigma / (1.0 - phi * psi)

    k = issued.size
    cov = np.zeros((k + 1, k + 1))
    cov[0, 0] = config.deficit_vol**2 / (1.0 - psi**2)
    cov[0, 1:] = cov[1:, 0] = cross
    if config.correlation_mode == "one_factor":
        denom = 1.0 - np.outer(phi, phi)
        cov[1:, 1:] = config.correlation**2 * np.outer(sigma, sigma) / denom
    cov[np.arange(1, k + 1), np.arange(1, k + 1)] = s2
    mean = np.concatenate([[config.deficit_mean], config.mean_rates[issued]])
    return mean, cov, issued


def _xi_polynomials(config: ModelConfig, issued: np.ndarray,
                    issuance_level: float) -> tuple[np.ndarray, np.ndarray]:
    """Linear and quadratic coefficients of each xi entry over V = (D, r_issued).

    xi = (d - E d) + gamma^-1 (e^T ybar) * delta_g, where delta_g is the
    centered coupon column. Entry-wise over the 2M state rows:
      principal row j:  f_j D                      (linear in D)
      coupon row k:     sum_{j>=k} f_j D r_j       (bilinear)
    and delta_g adds gamma^-1 ybar_e sum_{j>=k} f_j r_j to coupon rows.
    """
    m = config.max_maturity
    k = issued.size
    dim = k + 1
    f_issued = config.allocation[issued]
    ginv = 1.0 / config.growth_factor

    beta = np.zeros((2 * m, dim))
    gamma_quad = np.zeros((2 * m, dim, dim))
    beta[:m, 0] = config.allocation  # principal rows: D f_j

    # tail indicator: coupon row k collects issued tenors j >= k (0-indexed rows)
    for row in range(m):
        sel = issued >= row  # issued tenor index >= row position <=> tenor > row
        if not np.any(sel):
            continue
        cols = np.flatnonzero(sel) + 1
        weights = f_issued[sel]
        # D * r_j terms of the forcing
        gamma_quad[m + row, 0, cols] += 0.5 * weights
        gamma_quad[m + row, cols, 0] += 0.5 * weights
        # centered coupon column scaled by the mean first-rung payment
        beta[m + row, cols] += ginv * issuance_level * weights
    return beta, gamma_quad


def _innovation_cov_exact(config: ModelConfig, ybar: np.ndarray) -> np.ndarray:
    """G_xi by Gaussian moment identities on the stationary joint law."""
    mean, cov, issued = _stationary_joint_law(config)
    m = config.max_maturity
    y_e = float(ybar[0] + ybar[m])
    beta, quad = _xi_polynomials(config, issued, y_e)
    beta_tilde = beta + 2.0 * np.einsum("aij,j->ai", quad, mean)
    qs = np.einsum("aij,jk->aik", quad, cov)
    return beta_tilde @ cov @ beta_tilde.T + 2.0 * np.einsum("aij,bji->ab", qs, qs)


def _innovation_cov_sampled(config: ModelConfig, ybar: np.ndarray,
                            samples: int, seed: int) -> np.ndarray:
    """Monte Carlo estimate of G_xi from the stationary joint law (validation path)."""
    mean, cov, issued = _stationary_joint_law(config)
    m = config.max_maturity
    y_e = float(ybar[0] + ybar[m])
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    v = rng.multivariate_normal(mean, cov, size=samples, method="svd")
    d = v[:, 0]
    rates = np.tile(config.mean_rates, (samples, 1))
    rates[:, issued] = v[:, 1:]

    stream = coupon_stream(rates, config.allocation)          # (n, M)
    xi = np.concatenate([d[:, None] * config.allocation, d[:, None] * stream], axis=1)
    delta_g = stream - coupon_stream(config.mean_rates, config.allocation)
    xi[:, m:] += (y_e / config.growth_factor) * delta_g
    return np.cov(xi, rowvar=False, ddof=1)


def _coupon_column_cov(config: ModelConfig) -> np.ndarray:
    """Cov of the stochastic coupon column delta_g, embedded in 2M x 2M."""
    mean, cov, issued = _stationary_joint_law(config)
    m = config.max_maturity
    a = np.zeros((m, issued.size))
    for row in range(m):
        sel = issued >= row
        a[row, sel] = config.allocation[issued[sel]]
    block = a @ cov[1:, 1:] @ a.T
    out = np.zeros((2 * m, 2 * m))
    out[m:, m:] = block
    return out


def _second_moment_radius(eb: np.ndarray, cov_g: np.ndarray, selector: np.ndarray,
                          ginv2: float) -> float:
    """Spectral radius of X -> E(B X B^T) by power iteration from a PSD start."""
    n = eb.shape[0]
    x = np.eye(n)
    lam_old = np.inf
    for _ in range(5000):
        y = eb @ x @ eb.T + ginv2 * float(selector @ x @ selector) * cov_g
        norm = float(np.linalg.norm(y))
        if norm == 0.0:
            return 0.0
        lam = norm
        x = y / norm
        if abs(lam - lam_old) <= 1e-10 * max(1.0, lam):
            return lam
        lam_old = lam
    return lam_old


def invariant_covariance(config: ModelConfig, method: str = "exact",
                         samples: int = 200_000, seed: int = 0) -> InvariantCovariance:
    """Solve C = E(B C B^T) + G_xi for the stationary state covariance.

    The Kronecker operator is E(B) (x) E(B) plus a rank-one correction from
    the coupon-column covariance; the solve runs as two Stein equations and
    a scalar fixed point, which scales past the dense Kronecker inverse and
    matches it to machine precision.
    """
    cert = ergodicity_certificate(config)
    if not cert.ergodic:
        raise NotErgodicError(
            f"certificate fails: phi_abs={cert.phi_abs:.6g}, "
            f"spectral_radius={cert.spectral_radius:.6g}")
    if method not in ("exact", "sampled"):
        raise ValueError(f"unknown G_xi backend {method!r}")

    ops = build_operators(config.growth_factor, config.max_maturity)
    m = config.max_maturity
    eb, _ = expected_companion(config, ops)

    # self-consistent mean of the i.i.d.-fied law: forcing uses the stationary
    # level covariance, not the innovation covariance
    mean, cov, issued = _stationary_joint_law(config)
    cross_over_d0 = np.zeros(m)
    cross_over_d0[issued] = cov[0, 1:] / config.deficit_mean
    ed_iid = config.deficit_mean * issuance_column(config.mean_rates + cross_over_d0, config)
    ybar = np.linalg.solve(np.eye(2 * m) - eb, ed_iid)

    if method == "exact":
        g_xi = _innovation_cov_exact(config, ybar)
    else:
        g_xi = _innovation_cov_sampled(config, ybar, samples, seed)
    g_xi = 0.5 * (g_xi + g_xi.T)

    cov_g = _coupon_column_cov(config)
    ginv2 = config.growth_factor**-2.0
    radius = _second_moment_radius(eb, cov_g, ops.selector, ginv2)
    if radius >= 1.0:
        raise SecondMomentUnavailableError(
            f"second-moment operator spectral radius {radius:.6g} >= 1")

    c_g = sla.solve_discrete_lyapunov(eb, g_xi)
    c_delta = sla.solve_discrete_lyapunov(eb, cov_g)
    e = ops.selector
    denom = 1.0 - ginv2 * float(e @ c_delta @ e)
    if denom <= 0.0:
        raise SecondMomentUnavailableError(
            f"rank-one second-moment correction is non-contractive (denominator {denom:.6g})")
    scale = float(e @ c_g @ e) / denom
    c = c_g + ginv2 * scale * c_delta
    c = 0.5 * (c + c.T)

    eigs = np.linalg.eigvalsh(c)
    tol = 1e-10 * max(1.0, float(np.max(np.abs(eigs))))
    if eigs.min() < -tol:
        raise InternalInconsistencyError(
            f"solved covariance has negative eigenvalue {eigs.min():.3e}")

    return InvariantCovariance(covariance=c, innovation_cov=g_xi, mean_state=ybar,
                               second_moment_radius=float(radius), method=method)
