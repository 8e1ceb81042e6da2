"""Maturity-ladder sovereign debt dynamics.

Deterministic steady-state analytics, a linear stochastic recurrence on the
future-cashflow state under correlated AR(1) rate and deficit drivers,
closed-form invariant moments with an ergodicity certificate, seeded Monte
Carlo validation, and constrained issuance-allocation optimization.
"""

from .config import ModelConfig, from_tenor_maps
from .deterministic import (
    NoGrowthLimits,
    OptimalTenor,
    Regime,
    SteadyMetrics,
    Trajectory,
    feedback_phi,
    no_growth_limits,
    optimal_tenor,
    simulate_deterministic,
    steady_metrics,
)
from .cashflow import CashflowState, issuance_column, sre_step, state_to_portfolio
from .drivers import DriverState, build_joint_covariance, initial_driver_state, step_drivers
from .errors import (
    DebtLadderError,
    ConfigError,
    CriticalFeedbackError,
    DivergenceError,
    InfeasibleError,
    InternalInconsistencyError,
    NotErgodicError,
    ScenarioError,
    SecondMomentUnavailableError,
)
from .frontier import (
    FrontierPoint,
    Objective,
    OptimizationSpec,
    RhoSweepRow,
    frontier,
    grid_search_reference,
    optimize_allocation,
    rho_sweep,
)
from .invariant import (
    CertificateResult,
    InvariantCovariance,
    InvariantReport,
    ergodicity_certificate,
    invariant_covariance,
    invariant_mean_state,
    invariant_metrics,
)
from .montecarlo import (
    PathEnsemble,
    RatioMetrics,
    SimulationSpec,
    batch_means_se,
    ensemble_stats,
    estimate_ratio_metrics,
    run_simulation,
)
from .scenario import Scenario, baseline_scenario, load_scenario, parse_scenario, scenario_to_yaml
from .validation import CheckResult, ValidationReport, run_validation

__version__ = "0.1.0"

__all__ = [
    "DebtLadderError",
    "CashflowState",
    "CertificateResult",
    "CheckResult",
    "ConfigError",
    "CriticalFeedbackError",
    "DivergenceError",
    "DriverState",
    "FrontierPoint",
    "InfeasibleError",
    "InternalInconsistencyError",
    "InvariantCovariance",
    "InvariantReport",
    "ModelConfig",
    "NoGrowthLimits",
    "NotErgodicError",
    "Objective",
    "OptimalTenor",
    "OptimizationSpec",
    "PathEnsemble",
    "RatioMetrics",
    "Regime",
    "RhoSweepRow",
    "Scenario",
    "ScenarioError",
    "SecondMomentUnavailableError",
    "SimulationSpec",
    "SteadyMetrics",
    "Trajectory",
    "ValidationReport",
    "baseline_scenario",
    "batch_means_se",
    "build_joint_covariance",
    "ensemble_stats",
    "ergodicity_certificate",
    "estimate_ratio_metrics",
    "feedback_phi",
    "from_tenor_maps",
    "frontier",
    "grid_search_reference",
    "initial_driver_state",
    "invariant_covariance",
    "invariant_mean_state",
    "invariant_metrics",
    "issuance_column",
    "load_scenario",
    "no_growth_limits",
    "optimal_tenor",
    "optimize_allocation",
    "parse_scenario",
    "rho_sweep",
    "run_simulation",
    "run_validation",
    "scenario_to_yaml",
    "simulate_deterministic",
    "sre_step",
    "state_to_portfolio",
    "steady_metrics",
    "step_drivers",
]
