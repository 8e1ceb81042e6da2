"""Future-cashflow state and the one-step linear stochastic recurrence.

The state stacks scheduled principal and coupon payments by periods-ahead:
Y = (P, C) in R^(2M), normalized by the gamma^t trend. One period does
three things: the first rungs fall due (funding need), both ladders roll
down one slot, and the new issuance N adds principal N f and coupons
N U diag(r) f.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ModelConfig
from .errors import ConfigError, DivergenceError
from .operators import LadderOperators, coupon_stream

DIVERGENCE_GUARD = 1e12


@dataclass(frozen=True)
class CashflowState:
    """Scheduled payments by periods-ahead; arrays may carry batch dims."""

    principal: np.ndarray
    coupon: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.principal, dtype=float)
        c = np.asarray(self.coupon, dtype=float)
        if p.shape != c.shape:
            raise ConfigError(f"principal/coupon shapes differ: {p.shape} vs {c.shape}")
        object.__setattr__(self, "principal", p)
        object.__setattr__(self, "coupon", c)

    @classmethod
    def zero(cls, size: int) -> "CashflowState":
        return cls(principal=np.zeros(size), coupon=np.zeros(size))

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.principal, self.coupon], axis=-1)

    @classmethod
    def from_stacked(cls, vec: np.ndarray) -> "CashflowState":
        vec = np.asarray(vec, dtype=float)
        m = vec.shape[-1] // 2
        return cls(principal=vec[..., :m], coupon=vec[..., m:])


@dataclass(frozen=True)
class CompanionPair:
    """The SRE coefficients for one draw of (r, D): Y' = companion Y + forcing."""

    companion: np.ndarray
    forcing: np.ndarray


def issuance_column(rates: np.ndarray, config: ModelConfig) -> np.ndarray:
    """R'(r) f = (f, U diag(r) f): obligations created per unit of issuance."""
    return np.concatenate([
        np.broadcast_to(config.allocation, np.asarray(rates).shape),
        coupon_stream(rates, config.allocation),
    ], axis=-1)


def companion_pair(rates: np.ndarray, deficit: float, config: ModelConfig,
                   ops: LadderOperators) -> CompanionPair:
    """B = gamma^-1 (S' + R' f e^T), d = D R' f, for a single (r, D) draw."""
    col = issuance_column(np.asarray(rates, dtype=float), config)
    companion = (ops.doubled_shift + np.outer(col, ops.selector)) / config.growth_factor
    return CompanionPair(companion=companion, forcing=float(deficit) * col)


def step_arrays(
    principal: np.ndarray,
    coupon: np.ndarray,
    rates: np.ndarray,
    deficit: np.ndarray | float,
    config: ModelConfig,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Roll-and-issue step on raw arrays; returns (principal', coupon', issuance).

    Broadcasts over any leading batch dimensions. No divergence guard here;
    the simulation engine handles path flags.
    """
    ginv = 1.0 / config.growth_factor
    issuance = ginv * (principal[..., 0] + coupon[..., 0]) + deficit
    rolled_p = ginv * np.concatenate([principal[..., 1:], np.zeros_like(principal[..., :1])], axis=-1)
    rolled_c = ginv * np.concatenate([coupon[..., 1:], np.zeros_like(coupon[..., :1])], axis=-1)
    new_p = rolled_p + issuance[..., None] * config.allocation
    new_c = rolled_c + issuance[..., None] * coupon_stream(rates, config.allocation)
    return new_p, new_c, issuance


def sre_step(
    state: CashflowState,
    rates: np.ndarray,
    deficit: float,
    config: ModelConfig,
    ops: LadderOperators | None = None,
    check: bool = False,
) -> tuple[CashflowState, float]:
    """One SRE update: N = gamma^-1 (P_1 + C_1) + D; Y' = B Y + d.

    Computed in the O(M) roll-and-issue form; with check=True the O(M^2)
    matrix form is evaluated too and must agree to 1e-12 (test builds only).
    """
    new_p, new_c, issuance = step_arrays(state.principal, state.coupon,
                                         np.asarray(rates, dtype=float), float(deficit), config)
    if np.any(np.abs(issuance) > DIVERGENCE_GUARD):
        raise DivergenceError(f"normalized issuance {issuance!r} exceeds guard {DIVERGENCE_GUARD:g}")
    if check:
        if ops is None:
            raise ConfigError("matrix-form check requires the operator bundle")
        pair = companion_pair(rates, deficit, config, ops)
        matrix_next = pair.companion @ state.stacked() + pair.forcing
        explicit = np.concatenate([new_p, new_c], axis=-1)
        scale = max(1.0, float(np.max(np.abs(explicit))))
        if np.max(np.abs(explicit - matrix_next)) > 1e-12 * scale:
            raise AssertionError("roll-and-issue and matrix SRE forms disagree beyond 1e-12")
    return CashflowState(principal=new_p, coupon=new_c), float(issuance)


@dataclass(frozen=True)
class PortfolioView:
    """Ladder metrics read off a cashflow state; ratios absent when Q = 0."""

    total_debt: float
    q_levels: np.ndarray
    next_interest: float
    shares: np.ndarray | None
    rollover: float | None


def state_to_portfolio(state: CashflowState) -> PortfolioView:
    """Q = sum P_j; I = C_1; shares = P / Q (absent rather than NaN when Q = 0)."""
    p = np.asarray(state.principal, dtype=float)
    total = float(p.sum())
    interest = float(np.asarray(state.coupon)[..., 0])
    if total == 0.0:
        return PortfolioView(total_debt=0.0, q_levels=p, next_interest=interest,
                             shares=None, rollover=None)
    return PortfolioView(total_debt=total, q_levels=p, next_interest=interest,
                         shares=p / total, rollover=float(p[..., 0] / total))
