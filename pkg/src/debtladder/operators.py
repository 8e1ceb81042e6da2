"""Dense ladder operators: shift, cumulative, discount-Toeplitz and friends.

Everything downstream (steady-state formulas, the cashflow recurrence, the
invariant-moment solvers) is expressed through this small operator algebra,
so it is built once per (gamma, M) and shared read-only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

MAX_MATURITY = 100  # dense matrices only; every instance of interest has M <= 10


@dataclass(frozen=True)
class LadderOperators:
    """Operator bundle for a maturity grid of size M and growth factor gamma.

    shift:             S, ones on the first superdiagonal (S[j, j+1] = 1)
    doubled_shift:     block-diag(S, S) acting on stacked (principal, coupon)
    cumulative:        U, upper-triangular all-ones
    discount_toeplitz: T with T[j, k] = gamma^-(k-j) for k >= j
    doubled_toeplitz:  block-diag(T, T)
    discount_row:      h = (1, gamma^-1, ..., gamma^-(M-1)) = T^T e_1
    selector:          e in R^(2M), ones at the two "due next period" slots
    """

    gamma: float
    size: int
    shift: np.ndarray
    doubled_shift: np.ndarray
    cumulative: np.ndarray
    discount_toeplitz: np.ndarray
    doubled_toeplitz: np.ndarray
    discount_row: np.ndarray
    selector: np.ndarray


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def build_operators(gamma: float, size: int) -> LadderOperators:
    """Construct the dense operator bundle for growth factor gamma and M = size."""
    if not gamma > 1.0:
        raise ConfigError(f"growth factor must exceed 1, got {gamma}")
    if size < 1:
        raise ConfigError(f"maturity grid size must be >= 1, got {size}")
    if size > MAX_MATURITY:
        raise ConfigError(f"maturity grid size {size} exceeds the dense limit {MAX_MATURITY}")

    m = int(size)
    shift = np.eye(m, k=1)
    cumulative = np.triu(np.ones((m, m)))
    offsets = np.subtract.outer(np.arange(m), np.arange(m))  # j - k
    toeplitz = np.where(offsets <= 0, float(gamma) ** offsets.astype(float), 0.0)
    discount_row = toeplitz[0].copy()

    def doubled(a: np.ndarray) -> np.ndarray:
        out = np.zeros((2 * m, 2 * m))
        out[:m, :m] = a
        out[m:, m:] = a
        return out

    selector = np.zeros(2 * m)
    selector[0] = 1.0
    selector[m] = 1.0

    return LadderOperators(
        gamma=float(gamma),
        size=m,
        shift=_freeze(shift),
        doubled_shift=_freeze(doubled(shift)),
        cumulative=_freeze(cumulative),
        discount_toeplitz=_freeze(toeplitz),
        doubled_toeplitz=_freeze(doubled(toeplitz)),
        discount_row=_freeze(discount_row),
        selector=_freeze(selector),
    )


def coupon_matrix(rates: np.ndarray, size: int | None = None) -> np.ndarray:
    """U diag(r): column j carries rate r_j on rows 1..j (coupon stream matrix)."""
    r = np.asarray(rates, dtype=float)
    if r.ndim != 1:
        raise ConfigError("rate vector must be one-dimensional")
    if size is not None and r.shape[0] != size:
        raise ConfigError(f"rate vector has length {r.shape[0]}, expected {size}")
    m = r.shape[0]
    return np.triu(np.tile(r, (m, 1)))


def coupon_stream(rates: np.ndarray, allocation: np.ndarray) -> np.ndarray:
    """U diag(r) f without forming the matrix: entry k is sum_{j>=k} r_j f_j.

    This is the per-unit-issuance coupon ladder; it appears in the forcing
    term, the companion's rank-one column, and the rollover recursions.
    Supports leading batch dimensions on `rates`.
    """
    rf = np.asarray(rates, dtype=float) * np.asarray(allocation, dtype=float)
    return np.flip(np.cumsum(np.flip(rf, axis=-1), axis=-1), axis=-1)
