"""Constrained issuance-allocation optimization and parameter sweeps.

The rollover cap and the deterministic WAC objective are both linear in
wac-weight space (w_j ~ f_j (1 - gamma^-j)), so the deterministic problem is
an exact LP. Stochastic objectives are smooth rational functions of f with
linear constraints (the theta_1 cap clears its denominator), solved by
multi-start SLSQP and cross-checked against an exhaustive simplex grid.
"""

from __future__ import annotations

import enum
import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize as sopt

from .config import ModelConfig
from .deterministic import rollover_tau
from .drivers import build_joint_covariance
from .errors import ConfigError, InfeasibleError, NotErgodicError
from .invariant import ergodicity_certificate, invariant_metrics
from .montecarlo import SimulationSpec, estimate_ratio_metrics, run_simulation

FEASIBILITY_TOL = 1e-9
TIE_TOL = 1e-9


class Objective(enum.Enum):
    INVARIANT_INTEREST = "invariant_interest"
    INVARIANT_DEBT = "invariant_debt"
    COST_RATIO = "cost_ratio"
    DETERMINISTIC_WAC = "deterministic_wac"


@dataclass(frozen=True)
class OptimizationSpec:
    objective: Objective = Objective.INVARIANT_INTEREST
    rollover_cap: float = 0.3
    lower_bounds: dict[int, float] = field(default_factory=dict)
    upper_bounds: dict[int, float] = field(default_factory=dict)
    rho_override: float | None = None

    def __post_init__(self):
        if not 0.0 < self.rollover_cap < 1.0:
            raise ConfigError(f"rollover_cap must lie in (0, 1), got {self.rollover_cap}")
        for name, bounds in (("lower", self.lower_bounds), ("upper", self.upper_bounds)):
            for tenor, v in bounds.items():
                if not 0.0 <= float(v) <= 1.0:
                    raise ConfigError(f"{name} bound for tenor {tenor} outside [0, 1]: {v}")


@dataclass(frozen=True)
class FrontierPoint:
    rollover_cap: float
    objective: Objective
    allocation: dict[int, float] | None
    objective_value: float | None
    theta1: float | None
    binding_constraints: tuple[str, ...]
    error: str | None = None

    @property
    def feasible(self) -> bool:
        return self.error is None


class _ClosedForms:
    """Per-tenor linear coefficients of every steady/invariant quantity.

    Everything needed by the objectives is linear in f: Phi, Phi_Sigma,
    1^T T f, the first coupon row, and the theta_1 numerator/denominator.
    Batched evaluation over many candidate allocations is a handful of dots.
    """

    def __init__(self, config: ModelConfig, rho: float | None = None):
        self.config = config if rho is None else config.replace(correlation=rho)
        cfg = self.config
        gamma = cfg.growth_factor
        j = np.arange(1, cfg.max_maturity + 1, dtype=float)
        disc = gamma**-j
        annuity = (1.0 - disc) / (1.0 - 1.0 / gamma)  # sum_{k<=j} gamma^-(k-1)
        sigma_over_d0 = cfg.correlation * cfg.deficit_vol * cfg.rate_vol / cfg.deficit_mean
        r_sigma = cfg.mean_rates + sigma_over_d0

        self.tenors = np.array(cfg.issued_tenors)
        idx = self.tenors - 1
        self.phi_coef = (disc + cfg.mean_rates * annuity / gamma)[idx]
        self.phi_sigma_coef = (disc + r_sigma * annuity / gamma)[idx]
        self.debt_coef = (annuity)[idx]                       # 1^T T f coefficients
        self.interest_coef = (cfg.mean_rates * annuity)[idx]  # first coupon row of T g
        self.interest_sigma_coef = (r_sigma * annuity)[idx]
        self.theta_num = (disc * gamma)[idx]                  # gamma^-(j-1)
        self.theta_den = annuity[idx]
        self.wac_raw = (1.0 - disc)[idx]
        self.rates = cfg.mean_rates[idx]
        self.d0 = cfg.deficit_mean

    def theta1(self, x: np.ndarray) -> np.ndarray:
        return (x @ self.theta_num) / (x @ self.theta_den)

    def phi(self, x: np.ndarray) -> np.ndarray:
        return x @ self.phi_coef

    def values(self, x: np.ndarray, objective: Objective) -> np.ndarray:
        """Objective values for a batch of allocations x (..., K)."""
        x = np.asarray(x, dtype=float)
        if objective is Objective.DETERMINISTIC_WAC:
            w = x * self.wac_raw
            return (w @ self.rates) / w.sum(axis=-1)
        phi = x @ self.phi_coef
        phi_sigma = x @ self.phi_sigma_coef
        with np.errstate(divide="ignore", invalid="ignore"):
            boost = phi_sigma / (1.0 - phi)
            debt = self.d0 * (x @ self.debt_coef) * (1.0 + boost)
            interest = self.d0 * ((x @ self.interest_sigma_coef) + boost * (x @ self.interest_coef))
            if objective is Objective.INVARIANT_DEBT:
                out = debt
            elif objective is Objective.INVARIANT_INTEREST:
                out = interest
            else:
                out = interest / debt
        return np.where(phi < 1.0, out, np.inf)


def _resolve_bounds(tenors: np.ndarray, spec: OptimizationSpec) -> tuple[np.ndarray, np.ndarray]:
    lb = np.array([float(spec.lower_bounds.get(int(t), 0.0)) for t in tenors])
    ub = np.array([float(spec.upper_bounds.get(int(t), 1.0)) for t in tenors])
    if np.any(lb > ub + 1e-15):
        raise InfeasibleError("a lower bound exceeds its upper bound")
    if lb.sum() > 1.0 + FEASIBILITY_TOL or ub.sum() < 1.0 - FEASIBILITY_TOL:
        raise InfeasibleError(
            f"bounds exclude the simplex: sum lower = {lb.sum():.6g}, sum upper = {ub.sum():.6g}")
    return lb, ub


def _min_theta1(forms: _ClosedForms, lb: np.ndarray, ub: np.ndarray) -> tuple[float, np.ndarray]:
    """Minimum achievable theta_1 under the bounds, by LP in w-space."""
    k = forms.tenors.size
    denom = forms.wac_raw  # f_j ~ w_j / denom_j up to normalization
    a_ub = []
    b_ub = []
    for i in range(k):
        row = lb[i] / denom  # f_i >= lb_i  <=>  w_i/denom_i - lb_i sum_j w_j/denom_j >= 0
        row = row.copy()
        row[i] -= 1.0 / denom[i]
        a_ub.append(row)
        b_ub.append(0.0)
        row = -(ub[i] / denom)
        row = row.copy()
        row[i] += 1.0 / denom[i]
        a_ub.append(row)
        b_ub.append(0.0)
    tau = rollover_tau(forms.config.growth_factor, forms.tenors)
    res = sopt.linprog(tau, A_ub=np.array(a_ub), b_ub=np.array(b_ub),
                       A_eq=np.ones((1, k)), b_eq=[1.0], bounds=[(0.0, None)] * k,
                       method="highs")
    if not res.success:
        raise InfeasibleError(f"no allocation satisfies the bounds: {res.message}")
    w = res.x
    f = (w / denom) / (w / denom).sum()
    return float(tau @ w), f


def _wac_lp(forms: _ClosedForms, cap: float, lb: np.ndarray, ub: np.ndarray) -> np.ndarray:
    """Exact LP for the deterministic WAC objective, in w-space."""
    k = forms.tenors.size
    denom = forms.wac_raw
    tau = rollover_tau(forms.config.growth_factor, forms.tenors)
    a_ub = [np.asarray(tau, dtype=float)]
    b_ub = [cap]
    for i in range(k):
        row = lb[i] / denom
        row = row.copy()
        row[i] -= 1.0 / denom[i]
        a_ub.append(row)
        b_ub.append(0.0)
        row = -(ub[i] / denom)
        row = row.copy()
        row[i] += 1.0 / denom[i]
        a_ub.append(row)
        b_ub.append(0.0)
    res = sopt.linprog(forms.rates, A_ub=np.array(a_ub), b_ub=np.array(b_ub),
                       A_eq=np.ones((1, k)), b_eq=[1.0], bounds=[(0.0, None)] * k,
                       method="highs")
    if not res.success:
        raise InfeasibleError(f"WAC linear program infeasible: {res.message}")
    w = res.x
    f = (w / denom) / (w / denom).sum()
    return f


def _starts(forms: _ClosedForms, cap: float, lb: np.ndarray, ub: np.ndarray) -> list[np.ndarray]:
    """16 deterministic starting points spread over the feasible region."""
    k = forms.tenors.size
    pts: list[np.ndarray] = []

    def push(x):
        x = np.clip(np.asarray(x, dtype=float), lb, ub)
        s = x.sum()
        if s > 0:
            pts.append(x / s)

    push(np.full(k, 1.0 / k))
    try:
        push(_wac_lp(forms, cap, lb, ub))
    except InfeasibleError:
        pass
    _, f_min = _min_theta1(forms, lb, ub)
    push(f_min)
    for i in range(k):
        tilt = np.full(k, 0.2 / max(k - 1, 1))
        tilt[i] = 0.8
        push(tilt)
    for i, j in itertools.combinations(range(k), 2):
        mix = np.zeros(k)
        mix[i] = mix[j] = 0.5
        push(mix)
        if len(pts) >= 16:
            break
    return pts[:16]


def _binding(forms: _ClosedForms, x: np.ndarray, cap: float,
             lb: np.ndarray, ub: np.ndarray) -> tuple[str, ...]:
    out = []
    if forms.theta1(x) >= cap - 1e-7:
        out.append("rollover_cap")
    for i, tenor in enumerate(forms.tenors):
        if x[i] <= lb[i] + 1e-7 and lb[i] > 0:
            out.append(f"floor:{int(tenor)}")
        if x[i] >= ub[i] - 1e-7 and ub[i] < 1:
            out.append(f"ceiling:{int(tenor)}")
    return tuple(out)


def optimize_allocation(config: ModelConfig, spec: OptimizationSpec) -> FrontierPoint:
    """Minimize the chosen objective over allocations subject to the theta_1 cap.

    Raises InfeasibleError when the cap is below the minimum achievable
    rollover fraction, and NotErgodicError when the certificate fails at the
    optimum.
    """
    forms = _ClosedForms(config, spec.rho_override)
    tenors = forms.tenors
    if tenors.size == 0:
        raise ConfigError("config has no issued tenors")
    lb, ub = _resolve_bounds(tenors, spec)
    cap = spec.rollover_cap

    min_theta, _ = _min_theta1(forms, lb, ub)
    if min_theta > cap + FEASIBILITY_TOL:
        raise InfeasibleError(
            f"rollover cap {cap:.6g} below minimum achievable theta_1 {min_theta:.6g}"
            f" (longest allowed concentration)")

    if spec.objective is Objective.DETERMINISTIC_WAC:
        best = _wac_lp(forms, cap, lb, ub)
    else:
        # theta_1 <= cap with cleared denominator, and Phi < 1, both linear in x
        cap_row = forms.theta_num - cap * forms.theta_den
        constraints = [
            {"type": "eq", "fun": lambda x: x.sum() - 1.0, "jac": lambda x: np.ones_like(x)},
            {"type": "ineq", "fun": lambda x: -(cap_row @ x), "jac": lambda x: -cap_row},
            {"type": "ineq", "fun": lambda x: 1.0 - 1e-9 - forms.phi(x),
             "jac": lambda x: -forms.phi_coef},
        ]
        objective = spec.objective
        candidates = []
        for x0 in _starts(forms, cap, lb, ub):
            with warnings.catch_warnings():
                # SLSQP probes outside the box during line search and clips;
                # the probe points are never accepted as iterates
                warnings.simplefilter("ignore", RuntimeWarning)
                res = sopt.minimize(lambda x: float(forms.values(x, objective)), x0,
                                    method="SLSQP", bounds=list(zip(lb, ub)),
                                    constraints=constraints,
                                    options={"maxiter": 300, "ftol": 1e-14})
            x = np.clip(res.x, lb, ub)
            s = x.sum()
            if s <= 0:
                continue
            x = x / s
            ok = (abs(x.sum() - 1.0) <= FEASIBILITY_TOL
                  and forms.theta1(x) <= cap + FEASIBILITY_TOL
                  and np.all(x >= lb - FEASIBILITY_TOL) and np.all(x <= ub + FEASIBILITY_TOL))
            if ok and np.isfinite(forms.values(x, objective)):
                candidates.append(x)
        if not candidates:
            raise InfeasibleError("no feasible candidate survived the multistart solve")
        vals = np.array([float(forms.values(x, spec.objective)) for x in candidates])
        best_val = vals.min()
        ties = [x for x, v in zip(candidates, vals) if v <= best_val + TIE_TOL]
        best = max(ties, key=lambda x: tuple(x))  # shorter-tenor-heavy tie-break

    cfg_star = forms.config.with_allocation({int(t): float(v) for t, v in zip(tenors, best)})
    cert = ergodicity_certificate(cfg_star)
    if not cert.ergodic:
        raise NotErgodicError(
            f"optimal allocation fails the ergodicity certificate: "
            f"phi_abs={cert.phi_abs:.6g}, spectral_radius={cert.spectral_radius:.6g}")

    return FrontierPoint(
        rollover_cap=cap,
        objective=spec.objective,
        allocation={int(t): float(v) for t, v in zip(tenors, best)},
        objective_value=float(forms.values(best, spec.objective)),
        theta1=float(forms.theta1(best)),
        binding_constraints=_binding(forms, best, cap, lb, ub),
    )


def frontier(config: ModelConfig, caps: list[float],
             spec: OptimizationSpec | None = None) -> list[FrontierPoint]:
    """Independent optimizations along a descending grid of rollover caps.

    Per-point failures are carried in the point's error field; the sweep
    continues.
    """
    spec = spec or OptimizationSpec()
    points = []
    for cap in sorted((float(c) for c in caps), reverse=True):
        try:
            points.append(optimize_allocation(
                config, OptimizationSpec(objective=spec.objective, rollover_cap=cap,
                                         lower_bounds=spec.lower_bounds,
                                         upper_bounds=spec.upper_bounds,
                                         rho_override=spec.rho_override)))
        except (InfeasibleError, NotErgodicError, ConfigError) as exc:
            points.append(FrontierPoint(rollover_cap=cap, objective=spec.objective,
                                        allocation=None, objective_value=None, theta1=None,
                                        binding_constraints=(), error=str(exc)))
    return points


@dataclass(frozen=True)
class RhoSweepRow:
    rho: float
    cost_ratio: float | None
    total_debt: float | None
    next_interest: float | None
    psd_ok: bool
    mc_ratio: float | None = None
    mc_se: float | None = None
    error: str | None = None


def rho_sweep(config: ModelConfig, rho_values: list[float], mc_paths: int | None = None,
              mc_horizon: int = 100, mc_burn_in: int = 20, seed: int = 0) -> list[RhoSweepRow]:
    """Analytic cost ratio per rho, with optional MC ratio estimates."""
    rows = []
    for rho in rho_values:
        cfg = config.replace(correlation=float(rho))
        try:
            build_joint_covariance(cfg)
        except ConfigError as exc:
            rows.append(RhoSweepRow(rho=float(rho), cost_ratio=None, total_debt=None,
                                    next_interest=None, psd_ok=False, error=str(exc)))
            continue
        try:
            report = invariant_metrics(cfg)
        except NotErgodicError as exc:
            rows.append(RhoSweepRow(rho=float(rho), cost_ratio=None, total_debt=None,
                                    next_interest=None, psd_ok=True, error=str(exc)))
            continue
        mc_ratio = mc_se = None
        if mc_paths:
            ensemble = run_simulation(cfg, SimulationSpec(
                horizon=mc_horizon, paths=mc_paths, master_seed=seed,
                burn_in=mc_burn_in, warm_start=True))
            est = estimate_ratio_metrics(ensemble)
            mc_ratio, mc_se = est.ratio_of_means, est.se_ratio_of_means
        rows.append(RhoSweepRow(rho=float(rho), cost_ratio=report.cost_ratio,
                                total_debt=report.total_debt, next_interest=report.next_interest,
                                psd_ok=True, mc_ratio=mc_ratio, mc_se=mc_se))
    return rows


def _simplex_grid(k: int, units: int) -> np.ndarray:
    """All nonnegative integer k-tuples summing to `units`, as fractions."""
    if k == 1:
        return np.array([[1.0]])
    combos = itertools.combinations(range(units + k - 1), k - 1)
    grid = []
    for dividers in combos:
        prev = -1
        parts = []
        for d in dividers:
            parts.append(d - prev - 1)
            prev = d
        parts.append(units + k - 2 - prev)
        grid.append(parts)
    return np.asarray(grid, dtype=float) / units


def grid_search_reference(config: ModelConfig, spec: OptimizationSpec,
                          step: float = 0.005) -> FrontierPoint:
    """Exhaustive simplex-grid optimum (<= 4 issued tenors): the solver oracle."""
    forms = _ClosedForms(config, spec.rho_override)
    tenors = forms.tenors
    if tenors.size > 4:
        raise ConfigError("grid oracle supports at most 4 issued tenors")
    lb, ub = _resolve_bounds(tenors, spec)
    units = int(round(1.0 / step))
    grid = _simplex_grid(tenors.size, units)
    mask = np.all(grid >= lb - 1e-12, axis=1) & np.all(grid <= ub + 1e-12, axis=1)
    grid = grid[mask]
    grid = grid[forms.theta1(grid) <= spec.rollover_cap + 1e-12]
    if grid.shape[0] == 0:
        raise InfeasibleError("grid oracle found no feasible point")
    vals = forms.values(grid, spec.objective)
    best_val = vals.min()
    ties = grid[vals <= best_val + 1e-12]
    order = np.lexsort(tuple(ties[:, i] for i in range(ties.shape[1] - 1, -1, -1)))
    best = ties[order[-1]]
    return FrontierPoint(
        rollover_cap=spec.rollover_cap,
        objective=spec.objective,
        allocation={int(t): float(v) for t, v in zip(tenors, best)},
        objective_value=float(forms.values(best, spec.objective)),
        theta1=float(forms.theta1(best)),
        binding_constraints=_binding(forms, best, spec.rollover_cap, lb, ub),
    )
