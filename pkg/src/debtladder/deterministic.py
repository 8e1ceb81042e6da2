"""Deterministic steady-state analytics and the trajectory recursion oracle.

All quantities live in trend-normalized units: levels divided by gamma^t.
The feedback scalar Phi (discounted principal + coupon load per unit of
issuance) organizes everything: Phi < 1 is the deficit-driven regime where
normalized issuance converges to N_inf = D0 / (1 - Phi).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .config import ModelConfig
from .errors import ConfigError, InternalInconsistencyError
from .operators import LadderOperators, build_operators, coupon_stream

DIVERGENCE_GUARD = 1e12
NEAR_CRITICAL_BAND = 1e-6
REGIME_AGREEMENT_TOL = 1e-10


class Regime(enum.Enum):
    DEFICIT_DRIVEN = "deficit_driven"
    INTEREST_DRIVEN = "interest_driven"


def rollover_tau(gamma: float, tenor) -> np.ndarray | float:
    """tau_j = (gamma - 1)/(gamma^j - 1): rollover fraction of a single-tenor ladder."""
    j = np.asarray(tenor, dtype=float)
    out = (gamma - 1.0) / (gamma**j - 1.0)
    return float(out) if out.ndim == 0 else out


def feedback_phi(config: ModelConfig, rates: np.ndarray | None = None) -> float:
    """Phi = sum_k gamma^-k (f_k + sum_{j>=k} r_j f_j).

    Discounted obligations (principal plus the coupon tail) created per unit
    of new issuance. When rates is None the config means are used.
    """
    r = config.mean_rates if rates is None else np.asarray(rates, dtype=float)
    if r.shape != (config.max_maturity,):
        raise ConfigError(f"rates must have length {config.max_maturity}")
    f = config.allocation
    disc = config.growth_factor ** -np.arange(1, config.max_maturity + 1, dtype=float)
    return float(disc @ (f + coupon_stream(r, f)))


def feedback_phi_geometric(config: ModelConfig, rates: np.ndarray | None = None) -> float:
    """Equivalent geometric-sum form of Phi (kept separate as a cross-check):

    sum_j f_j gamma^-j + sum_j r_j f_j * gamma^-1 (1 - gamma^-j)/(1 - gamma^-1)
    """
    r = config.mean_rates if rates is None else np.asarray(rates, dtype=float)
    f = config.allocation
    gamma = config.growth_factor
    ginv = 1.0 / gamma
    disc = gamma ** -np.arange(1, config.max_maturity + 1, dtype=float)
    annuity = ginv * (1.0 - disc) / (1.0 - ginv)
    return float(disc @ f + (r * f) @ annuity)


@dataclass(frozen=True)
class SteadyMetrics:
    """Closed-form steady state of the normalized deterministic recursion."""

    phi: float
    regime: Regime
    attracting: bool            # False when phi >= 1: formal values, non-attracting
    near_critical: bool         # |phi - 1| within the conditioning band
    n_infinity: float
    q_levels: np.ndarray
    total_debt: float
    shares: np.ndarray
    wac: float
    wac_weights: np.ndarray
    rollover: float


def steady_shares(config: ModelConfig, ops: LadderOperators | None = None) -> np.ndarray:
    """theta = T f / (1^T T f); the single code path used by every module."""
    ops = ops or build_operators(config.growth_factor, config.max_maturity)
    tf = ops.discount_toeplitz @ config.allocation
    return tf / tf.sum()


def wac_weights(config: ModelConfig) -> np.ndarray:
    """w_j proportional to f_j (1 - gamma^-j): face-outstanding coupon weights."""
    disc = config.growth_factor ** -np.arange(1, config.max_maturity + 1, dtype=float)
    raw = config.allocation * (1.0 - disc)
    return raw / raw.sum()


def steady_metrics(config: ModelConfig, rates: np.ndarray | None = None) -> SteadyMetrics:
    """All steady-state quantities; formal (flagged) when Phi >= 1."""
    ops = build_operators(config.growth_factor, config.max_maturity)
    r = config.mean_rates if rates is None else np.asarray(rates, dtype=float)
    phi = feedback_phi(config, r)
    near_critical = abs(phi - 1.0) <= NEAR_CRITICAL_BAND
    attracting = phi < 1.0
    if phi == 1.0:
        n_inf = np.inf
    else:
        n_inf = config.deficit_mean / (1.0 - phi)

    tf = ops.discount_toeplitz @ config.allocation
    shares = tf / tf.sum()
    w = wac_weights(config)
    wac = float(w @ r)

    return SteadyMetrics(
        phi=phi,
        regime=Regime.DEFICIT_DRIVEN if phi < 1.0 else Regime.INTEREST_DRIVEN,
        attracting=attracting,
        near_critical=near_critical,
        n_infinity=float(n_inf),
        q_levels=n_inf * tf,
        total_debt=float(n_inf * tf.sum()),
        shares=shares,
        wac=wac,
        wac_weights=w,
        rollover=float(shares[0]),
    )


def classify_regime(config: ModelConfig, rates: np.ndarray | None = None) -> Regime:
    """Deficit-driven iff Phi < 1 iff WAC < g; both tests run and must agree."""
    r = config.mean_rates if rates is None else np.asarray(rates, dtype=float)
    phi = feedback_phi(config, r)
    wac = float(wac_weights(config) @ r)
    by_phi = phi < 1.0
    by_wac = wac < config.growth_rate
    if by_phi != by_wac and abs(phi - 1.0) > REGIME_AGREEMENT_TOL:
        raise InternalInconsistencyError(
            f"regime tests disagree away from criticality: phi={phi!r}, wac={wac!r}, g={config.growth_rate!r}")
    return Regime.DEFICIT_DRIVEN if by_phi else Regime.INTEREST_DRIVEN


@dataclass(frozen=True)
class NoGrowthLimits:
    """gamma -> 1+ limits of the steady formulas."""

    shares: np.ndarray
    wac_weights: np.ndarray
    rollover: float
    nwam: float
    wac: float


def no_growth_limits(config: ModelConfig) -> NoGrowthLimits:
    f = config.allocation
    j = np.arange(1, config.max_maturity + 1, dtype=float)
    nwam = float(j @ f)  # new-issue weighted average maturity
    shares = np.flip(np.cumsum(np.flip(f))) / nwam
    w = j * f / nwam
    return NoGrowthLimits(shares=shares, wac_weights=w, rollover=1.0 / nwam,
                          nwam=nwam, wac=float(w @ config.mean_rates))


@dataclass(frozen=True)
class OptimalTenor:
    """Cheapest maturity point for a rollover tolerance R, plus the exact blend."""

    j_star: float
    tenor_low: int
    tenor_high: int
    blend_low: float            # weight on tenor_low in tau-space
    allocation: dict[int, float]  # two-tenor issuance weights achieving theta_1 = R


def optimal_tenor(gamma: float, tolerance: float) -> OptimalTenor:
    """j* = log(1 + (gamma-1)/R) / log gamma, with the bracketing two-tenor blend.

    The blend is computed in wac-weight space, where theta_1 = sum w_j tau_j is
    linear, then mapped back to issuance weights f_j ~ w_j / (1 - gamma^-j).
    """
    if not gamma > 1.0:
        raise ConfigError(f"growth factor must exceed 1, got {gamma}")
    if not 0.0 < tolerance <= 1.0:
        raise ConfigError(f"rollover tolerance must lie in (0, 1], got {tolerance}")

    j_star = float(np.log1p((gamma - 1.0) / tolerance) / np.log(gamma))
    low = int(np.floor(j_star + 1e-12))
    high = int(np.ceil(j_star - 1e-12))

    if low == high:
        return OptimalTenor(j_star=j_star, tenor_low=low, tenor_high=high,
                            blend_low=1.0, allocation={low: 1.0})

    tau_low = rollover_tau(gamma, low)
    tau_high = rollover_tau(gamma, high)
    lam = (tolerance - tau_high) / (tau_low - tau_high)
    f_low = lam / (1.0 - gamma**-low)
    f_high = (1.0 - lam) / (1.0 - gamma**-high)
    total = f_low + f_high
    return OptimalTenor(j_star=j_star, tenor_low=low, tenor_high=high, blend_low=float(lam),
                        allocation={low: float(f_low / total), high: float(f_high / total)})


@dataclass(frozen=True)
class Trajectory:
    """A simulated normalized path of the budget recursion.

    states[t] is the maturity ladder after period t's issuance; issuance,
    interest, maturing and deficits are the period-t flows. The budget
    identity N_t = D_t + I_t + M_t holds exactly by construction and is
    re-asserted to 1e-12.
    """

    periods: int
    normalized_issuance: np.ndarray
    normalized_states: np.ndarray
    interest: np.ndarray
    maturing: np.ndarray
    deficits: np.ndarray
    divergent: bool

    def __post_init__(self):
        t = self.periods
        resid = self.normalized_issuance[:t] - (
            self.deficits[:t] + self.interest[:t] + self.maturing[:t])
        if t and not np.all(np.abs(resid) <= 1e-12 * np.maximum(1.0, np.abs(self.normalized_issuance[:t]))):
            raise InternalInconsistencyError("budget identity violated along trajectory")


def simulate_deterministic(
    config: ModelConfig,
    horizon: int,
    initial: np.ndarray | None = None,
    rates_path: np.ndarray | None = None,
    deficits_path: np.ndarray | None = None,
) -> Trajectory:
    """Iterate the normalized ladder recursion for `horizon` periods.

    With the default constant drivers this is the oracle for every steady
    formula; supplying per-period rates/deficits makes it the Q-ladder leg of
    the representation-equivalence checks. The initial debt stock, if any, is
    assumed to carry coupons at the mean rates of its rungs.
    """
    if horizon < 1:
        raise ConfigError(f"horizon must be >= 1, got {horizon}")
    m = config.max_maturity
    f = config.allocation
    ginv = 1.0 / config.growth_factor

    q = np.zeros(m) if initial is None else np.array(initial, dtype=float)
    if q.shape != (m,):
        raise ConfigError(f"initial state must have length {m}")
    if np.any(q < 0):
        raise ConfigError("initial state must be nonnegative")
    # coupon ladder owed by the initial stock, at mean rates
    c = np.flip(np.cumsum(np.flip(config.mean_rates * q)))

    if rates_path is not None:
        rates_path = np.asarray(rates_path, dtype=float)
        if rates_path.shape != (horizon, m):
            raise ConfigError(f"rates_path must have shape ({horizon}, {m})")
    if deficits_path is not None:
        deficits_path = np.asarray(deficits_path, dtype=float)
        if deficits_path.shape != (horizon,):
            raise ConfigError(f"deficits_path must have shape ({horizon},)")

    issuance = np.zeros(horizon)
    states = np.zeros((horizon, m))
    interest = np.zeros(horizon)
    maturing = np.zeros(horizon)
    deficits = np.zeros(horizon)
    divergent = False
    steps = 0

    for t in range(horizon):
        r_t = config.mean_rates if rates_path is None else rates_path[t]
        d_t = config.deficit_mean if deficits_path is None else float(deficits_path[t])
        m_t = ginv * q[0]
        i_t = ginv * c[0]
        n_t = d_t + i_t + m_t
        if abs(n_t) > DIVERGENCE_GUARD:
            divergent = True
            break
        # roll the ladders down one rung (in normalized units) and issue
        q = ginv * np.append(q[1:], 0.0) + n_t * f
        c = ginv * np.append(c[1:], 0.0) + n_t * coupon_stream(r_t, f)
        issuance[t] = n_t
        states[t] = q
        interest[t] = i_t
        maturing[t] = m_t
        deficits[t] = d_t
        steps = t + 1

    return Trajectory(
        periods=steps,
        normalized_issuance=issuance[:steps],
        normalized_states=states[:steps],
        interest=interest[:steps],
        maturing=maturing[:steps],
        deficits=deficits[:steps],
        divergent=divergent,
    )
