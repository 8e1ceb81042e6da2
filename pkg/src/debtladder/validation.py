"""Runtime cross-checks: every closed form validated by an independent route.

Each check recomputes a quantity two ways (different representation,
different algorithm, or a literal brute-force recursion) and compares at a
stated tolerance. These run against the loaded scenario, so they double as a
health check on user-supplied parameters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cashflow import CashflowState, companion_pair, sre_step
from .config import ModelConfig
from .deterministic import (feedback_phi, feedback_phi_geometric, simulate_deterministic,
                            steady_metrics)
from .drivers import (build_joint_covariance, initial_driver_state, stationary_moments,
                      step_drivers)
from .operators import build_operators
from .errors import (ConfigError, CriticalFeedbackError, DebtLadderError, NotErgodicError,
                     SecondMomentUnavailableError)
from .invariant import (ergodicity_certificate, expected_companion, invariant_covariance,
                        invariant_mean_state, invariant_metrics)
from .montecarlo import SimulationSpec, run_simulation
from .scenario import Scenario

PHI_TOL = 1e-12
RECURSION_TOL = 1e-10
REPRESENTATION_TOL = 1e-12
MEAN_RESIDUAL_TOL = 1e-10
COLLAPSE_TOL = 1e-12
EIGEN_TOL = 1e-9
PSD_TOL = 1e-10


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    value: float | None = None
    tolerance: float | None = None


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> tuple[CheckResult, ...]:
        return tuple(c for c in self.checks if not c.passed)


def lagged_budget_recursion(config: ModelConfig, deficits: np.ndarray,
                            rates: np.ndarray | None = None) -> np.ndarray:
    """Budget sequence by the literal lag-sum recursion, no ladder state.

    n_t = d_t + sum_k gamma^-k (f_k + sum_{j>=k} r_j f_j) n_{t-k}, with the
    coupon term priced at the rates in force when vintage t-k was issued.
    Zero initial stock. Quadratic in the horizon; used only as a check.
    """
    f = config.allocation
    m = config.max_maturity
    gamma = config.growth_factor
    horizon = len(deficits)
    if rates is None:
        rates = np.tile(config.mean_rates, (horizon, 1))
    ns = np.zeros(horizon + 1)
    for t in range(1, horizon + 1):
        total = deficits[t - 1]
        for k in range(1, min(t, m) + 1):
            vintage_rates = rates[t - k - 1] if t - k >= 1 else config.mean_rates
            coupon = float(np.sum(vintage_rates[k - 1:] * f[k - 1:]))
            total += gamma**-k * (f[k - 1] + coupon) * ns[t - k]
        ns[t] = total
    return ns[1:]


def _check_phi_forms(config: ModelConfig) -> CheckResult:
    gap = abs(feedback_phi(config) - feedback_phi_geometric(config))
    rng = np.random.default_rng(7)
    for _ in range(20):
        shocked = config.replace()
        rates = config.mean_rates * rng.uniform(0.5, 1.5, config.max_maturity)
        gap = max(gap, abs(feedback_phi(shocked, rates) - feedback_phi_geometric(shocked, rates)))
    return CheckResult("phi_forms_agree", gap <= PHI_TOL,
                       f"max |primary - geometric| = {gap:.3e}", gap, PHI_TOL)


def _check_phi_identity(config: ModelConfig) -> CheckResult:
    metrics = steady_metrics(config)
    g = config.growth_rate
    implied = (metrics.shares[0] + metrics.wac) / (metrics.shares[0] + g)
    gap = abs(metrics.phi - implied)
    return CheckResult("phi_share_identity", gap <= PHI_TOL,
                       f"|phi - (theta_1 + wac)/(theta_1 + g)| = {gap:.3e}", gap, PHI_TOL)


def check_recursion(config: ModelConfig) -> CheckResult:
    horizon = 200
    rng = np.random.default_rng(11)
    deficits = config.deficit_mean * rng.uniform(0.5, 1.5, horizon)
    traj = simulate_deterministic(config, horizon, deficits_path=deficits)
    oracle = lagged_budget_recursion(config, deficits)
    gap = float(np.max(np.abs(traj.normalized_issuance - oracle)))
    return CheckResult("budget_recursion_oracle", gap <= RECURSION_TOL,
                       f"max |ladder - lag recursion| over {horizon} periods = {gap:.3e}",
                       gap, RECURSION_TOL)


def _check_representation(config: ModelConfig) -> CheckResult:
    horizon = 1000
    state = initial_driver_state(config)
    factor = build_joint_covariance(config)
    rng = np.random.default_rng(13)
    rates_path = np.empty((horizon, config.max_maturity))
    deficits_path = np.empty(horizon)
    for t in range(horizon):
        state = step_drivers(state, rng.standard_normal(factor.factor.shape[0]),
                             config, factor)
        rates_path[t] = state.rates
        deficits_path[t] = state.deficit
    traj = simulate_deterministic(config, horizon, rates_path=rates_path,
                                  deficits_path=deficits_path)
    cash = CashflowState.zero(config.max_maturity)
    gap = 0.0
    for t in range(horizon):
        cash, issuance = sre_step(cash, rates_path[t], deficits_path[t], config)
        gap = max(gap, abs(issuance - traj.normalized_issuance[t]))
        gap = max(gap, float(np.max(np.abs(cash.principal - traj.normalized_states[t]))))
    scale = max(1.0, float(np.max(np.abs(traj.normalized_issuance))))
    rel = gap / scale
    return CheckResult("representation_equivalence", rel <= REPRESENTATION_TOL,
                       f"ladder vs cashflow state, rel gap over {horizon} periods = {rel:.3e}",
                       rel, REPRESENTATION_TOL)


def check_mean_residual(config: ModelConfig) -> CheckResult:
    try:
        mean = invariant_mean_state(config)
    except (NotErgodicError, CriticalFeedbackError) as exc:
        return CheckResult("invariant_mean_residual", False, f"unavailable: {exc}")
    companion, forcing = expected_companion(config)
    residual = mean - (companion @ mean + forcing)
    rel = float(np.max(np.abs(residual))) / max(1.0, float(np.max(np.abs(mean))))
    return CheckResult("invariant_mean_residual", rel <= MEAN_RESIDUAL_TOL,
                       f"fixed-point residual of closed-form mean = {rel:.3e}",
                       rel, MEAN_RESIDUAL_TOL)


def _check_joint_covariance(config: ModelConfig) -> CheckResult:
    try:
        factor = build_joint_covariance(config)
    except ConfigError as exc:
        return CheckResult("driver_covariance_psd", False, str(exc))
    eigs = np.linalg.eigvalsh(factor.cov)
    scale = max(float(eigs.max()), 1e-300)
    ok = eigs.min() >= -PSD_TOL * scale
    recon = float(np.max(np.abs(factor.factor @ factor.factor.T - factor.cov)))
    ok = ok and recon <= 1e-12 * max(1.0, float(np.max(np.abs(factor.cov))))
    return CheckResult("driver_covariance_psd", ok,
                       f"min eigenvalue = {eigs.min():.3e}, factor residual = {recon:.3e}",
                       float(eigs.min()))


def _check_certificate(config: ModelConfig) -> CheckResult:
    cert = ergodicity_certificate(config)
    moments = stationary_moments(config)
    ops = build_operators(config.growth_factor, config.max_maturity)
    dominator = companion_pair(moments.abs_rate_means, 1.0, config, ops).companion
    dense = float(np.max(np.abs(np.linalg.eigvals(dominator))))
    gap = abs(cert.spectral_radius - dense)
    sign_ok = (cert.phi_abs < 1.0) == (dense < 1.0)
    ok = gap <= EIGEN_TOL and sign_ok and cert.converged
    return CheckResult("certificate_consistency", ok,
                       f"power iteration vs dense eigenvalues: gap = {gap:.3e}, "
                       f"phi_abs = {cert.phi_abs:.6f} and radius = {dense:.6f} "
                       f"{'agree' if sign_ok else 'DISAGREE'} on ergodicity",
                       gap, EIGEN_TOL)


def _check_collapse_uncorrelated(config: ModelConfig) -> CheckResult:
    cfg = config.replace(correlation=0.0)
    try:
        report = invariant_metrics(cfg)
    except (NotErgodicError, CriticalFeedbackError) as exc:
        return CheckResult("uncorrelated_collapse", False, f"unavailable: {exc}")
    steady = steady_metrics(cfg)
    gaps = [abs(report.total_debt - steady.total_debt),
            abs(report.phi_mean - steady.phi),
            float(np.max(np.abs(report.q_mean - steady.q_levels)))]
    rel = max(gaps) / max(1.0, steady.total_debt)
    return CheckResult("uncorrelated_collapse", rel <= COLLAPSE_TOL,
                       f"rho=0 invariant mean vs deterministic steady state: {rel:.3e}",
                       rel, COLLAPSE_TOL)


def _check_collapse_deterministic(config: ModelConfig) -> CheckResult:
    cfg = config.replace(rate_vol=np.zeros(config.max_maturity), deficit_vol=0.0,
                         correlation=0.0)
    horizon = 60
    ensemble = run_simulation(cfg, SimulationSpec(horizon=horizon, paths=2, master_seed=3))
    traj = simulate_deterministic(cfg, horizon)
    gap = float(np.max(np.abs(ensemble.issuance - traj.normalized_issuance[None, :])))
    return CheckResult("deterministic_collapse", gap <= COLLAPSE_TOL,
                       f"zero-vol simulation vs deterministic recursion: {gap:.3e}",
                       gap, COLLAPSE_TOL)


def _check_second_moment(config: ModelConfig) -> CheckResult:
    try:
        cov = invariant_covariance(config)
    except (NotErgodicError, SecondMomentUnavailableError, ConfigError) as exc:
        return CheckResult("stationary_covariance_psd", False, f"unavailable: {exc}")
    c = cov.covariance
    asym = float(np.max(np.abs(c - c.T)))
    eigs = np.linalg.eigvalsh(0.5 * (c + c.T))
    scale = max(float(eigs.max()), 1e-300)
    ok = asym <= 1e-10 * scale and eigs.min() >= -PSD_TOL * scale
    return CheckResult("stationary_covariance_psd", ok,
                       f"asymmetry = {asym:.3e}, min eigenvalue = {eigs.min():.3e}, "
                       f"second-moment radius = {cov.second_moment_radius:.6f}",
                       float(eigs.min()))


def run_validation(scenario: Scenario) -> ValidationReport:
    """All cross-checks against the scenario's configuration.

    A check that cannot even run (infeasible driver covariance, failed
    certificate) reports as failed with the reason; it never aborts the rest
    of the report.
    """
    config = scenario.config
    named = (
        ("phi_forms_agree", _check_phi_forms),
        ("phi_share_identity", _check_phi_identity),
        ("budget_recursion_oracle", check_recursion),
        ("representation_equivalence", _check_representation),
        ("invariant_mean_residual", check_mean_residual),
        ("driver_covariance_psd", _check_joint_covariance),
        ("certificate_consistency", _check_certificate),
        ("uncorrelated_collapse", _check_collapse_uncorrelated),
        ("deterministic_collapse", _check_collapse_deterministic),
        ("stationary_covariance_psd", _check_second_moment),
    )
    checks = []
    for name, fn in named:
        try:
            checks.append(fn(config))
        except DebtLadderError as exc:
            checks.append(CheckResult(name, False, f"check could not run: {exc}"))
    return ValidationReport(checks=tuple(checks))
