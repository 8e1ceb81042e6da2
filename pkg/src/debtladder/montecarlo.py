"""Seeded, reproducible Monte Carlo simulation of the normalized SRE.

Path p draws its own Philox stream from SeedSequence(master_seed,
spawn_key=(p,)), with all of the path's gaussians generated in one fixed
order, so results are bitwise identical however paths are batched or
threaded. Paths are stepped in fixed-size chunks (vectorized across the
chunk); the chunk size never depends on the thread count.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cashflow import CashflowState
from .config import ModelConfig
from .drivers import build_joint_covariance
from .errors import ConfigError
from .invariant import invariant_mean_state
from .operators import coupon_stream

DIVERGENCE_GUARD = 1e12
CHUNK_SIZE = 4096  # fixed: reductions inside a chunk are thread-count independent
DEFAULT_PERCENTILES = (15.0, 50.0, 85.0)


@dataclass(frozen=True)
class SimulationSpec:
    """What to simulate: horizon, path count, seeding, burn-in, start state."""

    horizon: int
    paths: int
    master_seed: int = 0
    burn_in: int = 20
    warm_start: bool = False                 # start every path at Y0 = E(Y)
    initial_state: CashflowState | None = None  # explicit start, overrides warm_start
    record_drivers: bool = False
    threads: int = 1

    def __post_init__(self):
        if self.horizon < 1:
            raise ConfigError(f"horizon must be >= 1, got {self.horizon}")
        if self.paths < 1:
            raise ConfigError(f"paths must be >= 1, got {self.paths}")
        if not 0 <= self.burn_in < self.horizon:
            raise ConfigError(f"burn_in must lie in [0, horizon), got {self.burn_in}")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")


@dataclass
class PathEnsemble:
    """Per-path, per-period metrics; column t holds period t+1 (1..horizon).

    Diverged paths are flagged and carry NaN from the divergence period on;
    rollover is NaN wherever total debt is zero (reported absent downstream).
    """

    spec: SimulationSpec
    total_debt: np.ndarray
    next_interest: np.ndarray
    rollover: np.ndarray
    issuance: np.ndarray
    divergent: np.ndarray
    rates: np.ndarray | None = None
    deficits: np.ndarray | None = None

    @property
    def horizon(self) -> int:
        return self.total_debt.shape[1]

    @property
    def paths(self) -> int:
        return self.total_debt.shape[0]


def _initial_cashflow(config: ModelConfig, spec: SimulationSpec) -> tuple[np.ndarray, np.ndarray]:
    m = config.max_maturity
    if spec.initial_state is not None:
        p = np.asarray(spec.initial_state.principal, dtype=float)
        c = np.asarray(spec.initial_state.coupon, dtype=float)
        if p.shape != (m,):
            raise ConfigError(f"initial state must have length {m}")
        return p, c
    if spec.warm_start:
        ybar = invariant_mean_state(config)
        return ybar[:m].copy(), ybar[m:].copy()
    return np.zeros(m), np.zeros(m)


def _run_chunk(start: int, stop: int, config: ModelConfig, spec: SimulationSpec,
               factor: np.ndarray, issued: np.ndarray,
               p0: np.ndarray, c0: np.ndarray, out: PathEnsemble) -> None:
    n = stop - start
    t_len = spec.horizon
    k = issued.size
    m = config.max_maturity
    ginv = 1.0 / config.growth_factor
    f = config.allocation
    rbar = config.mean_rates
    phi = config.rate_persistence
    d0 = config.deficit_mean
    psi = config.deficit_persistence

    gaussians = np.empty((n, t_len, k + 1))
    for i, path in enumerate(range(start, stop)):
        gen = np.random.Generator(np.random.Philox(
            np.random.SeedSequence(entropy=spec.master_seed, spawn_key=(path,))))
        gaussians[i] = gen.standard_normal((t_len, k + 1))

    principal = np.tile(p0, (n, 1))
    coupon = np.tile(c0, (n, 1))
    rates = np.tile(rbar, (n, 1))
    deficit = np.full(n, d0)
    alive = np.ones(n, dtype=bool)

    for t in range(t_len):
        innov = gaussians[:, t, :] @ factor.T
        rates = rbar + phi * (rates - rbar)
        rates[:, issued] += innov[:, 1:]
        deficit = d0 + psi * (deficit - d0) + innov[:, 0]

        issuance = ginv * (principal[:, 0] + coupon[:, 0]) + deficit
        alive &= np.abs(issuance) <= DIVERGENCE_GUARD

        new_p = ginv * np.concatenate([principal[:, 1:], np.zeros((n, 1))], axis=1)
        new_p += issuance[:, None] * f
        new_c = ginv * np.concatenate([coupon[:, 1:], np.zeros((n, 1))], axis=1)
        new_c += issuance[:, None] * coupon_stream(rates, f)
        principal = np.where(alive[:, None], new_p, principal)
        coupon = np.where(alive[:, None], new_c, coupon)

        q = principal.sum(axis=1)
        live = alive
        sl = slice(start, stop)
        out.total_debt[sl, t] = np.where(live, q, np.nan)
        out.next_interest[sl, t] = np.where(live, coupon[:, 0], np.nan)
        with np.errstate(invalid="ignore", divide="ignore"):
            out.rollover[sl, t] = np.where(live & (q != 0.0), principal[:, 0] / q, np.nan)
        out.issuance[sl, t] = np.where(live, issuance, np.nan)
        if out.rates is not None:
            out.rates[sl, t, :] = rates[:, issued]
        if out.deficits is not None:
            out.deficits[sl, t] = deficit

    out.divergent[start:stop] = ~alive


def run_simulation(config: ModelConfig, spec: SimulationSpec) -> PathEnsemble:
    """Simulate N independent paths of the normalized SRE.

    Bitwise reproducible for a given (config, spec) regardless of threads.
    Diverged paths are flagged and frozen; the others continue.
    """
    fact = build_joint_covariance(config)
    p0, c0 = _initial_cashflow(config, spec)
    n, t_len = spec.paths, spec.horizon
    k = fact.issued_idx.size

    out = PathEnsemble(
        spec=spec,
        total_debt=np.empty((n, t_len)),
        next_interest=np.empty((n, t_len)),
        rollover=np.empty((n, t_len)),
        issuance=np.empty((n, t_len)),
        divergent=np.zeros(n, dtype=bool),
        rates=np.empty((n, t_len, k)) if spec.record_drivers else None,
        deficits=np.empty((n, t_len)) if spec.record_drivers else None,
    )

    chunks = [(s, min(s + CHUNK_SIZE, n)) for s in range(0, n, CHUNK_SIZE)]
    if spec.threads == 1 or len(chunks) == 1:
        for s, e in chunks:
            _run_chunk(s, e, config, spec, fact.factor, fact.issued_idx, p0, c0, out)
    else:
        with ThreadPoolExecutor(max_workers=spec.threads) as pool:
            futures = [pool.submit(_run_chunk, s, e, config, spec, fact.factor,
                                   fact.issued_idx, p0, c0, out) for s, e in chunks]
            for fut in futures:
                fut.result()
    return out


# ---------------------------------------------------------------------------
# Ensemble statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnsembleStats:
    """Cross-path summaries: means, percentile bands, running time averages."""

    percentiles: tuple[float, ...]
    means: dict[str, np.ndarray]            # metric -> (T,)
    bands: dict[str, np.ndarray]            # metric -> (len(percentiles), T)
    time_avg_debt: np.ndarray               # (N, T) running per-path averages
    time_avg_interest: np.ndarray


def running_time_average(values: np.ndarray) -> np.ndarray:
    """(1/t) sum_{s<=t} x_s along axis 1, NaN-tolerant (diverged paths stay NaN)."""
    x = np.asarray(values, dtype=float)
    counts = np.cumsum(~np.isnan(x), axis=1)
    sums = np.nancumsum(x, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(counts > 0, sums / counts, np.nan)


def ensemble_stats(ensemble: PathEnsemble,
                   percentiles: tuple[float, ...] = DEFAULT_PERCENTILES) -> EnsembleStats:
    for p in percentiles:
        if not 0.0 < p < 100.0:
            raise ValueError(f"percentile {p} outside (0, 100)")
    metrics = {
        "total_debt": ensemble.total_debt,
        "next_interest": ensemble.next_interest,
        "rollover": ensemble.rollover,
        "issuance": ensemble.issuance,
    }
    means = {}
    bands = {}
    with warnings.catch_warnings():
        # all-NaN columns (every path diverged) are a legitimate outcome and
        # should summarize to NaN quietly, not warn
        warnings.simplefilter("ignore", RuntimeWarning)
        for name, arr in metrics.items():
            means[name] = np.nanmean(arr, axis=0)
            bands[name] = np.nanpercentile(arr, percentiles, axis=0)
    return EnsembleStats(
        percentiles=tuple(float(p) for p in percentiles),
        means=means,
        bands=bands,
        time_avg_debt=running_time_average(ensemble.total_debt),
        time_avg_interest=running_time_average(ensemble.next_interest),
    )


def batch_means_se(samples: np.ndarray, n_batches: int = 20) -> float:
    """Standard error of the mean of `samples` by batch means.

    Splits the sequence into n_batches contiguous batches; the SE is the
    standard deviation of batch means over sqrt(n_batches). Appropriate for
    autocorrelated series (time axis) and exact for i.i.d. ones (path axis).
    """
    x = np.asarray(samples, dtype=float)
    x = x[~np.isnan(x)]
    if x.size < 2 * n_batches:
        n_batches = max(2, x.size // 2)
    if x.size < 2:
        return float("nan")
    usable = (x.size // n_batches) * n_batches
    batches = x[:usable].reshape(n_batches, -1).mean(axis=1)
    return float(batches.std(ddof=1) / np.sqrt(n_batches))


@dataclass(frozen=True)
class RatioMetrics:
    """The two interest-cost estimators and their batch-means SEs.

    mean_of_ratios estimates E(I/Q); ratio_of_means estimates E(I)/E(Q).
    Their gap is the Jensen effect; it is reported, never asserted, since
    the ordering can flip under strongly positively correlated drivers.
    """

    mean_of_ratios: float
    ratio_of_means: float
    se_mean_of_ratios: float
    se_ratio_of_means: float

    @property
    def jensen_gap(self) -> float:
        return self.mean_of_ratios - self.ratio_of_means


def estimate_ratio_metrics(ensemble: PathEnsemble, n_batches: int = 20) -> RatioMetrics:
    """Post-burn-in estimators of E(I/Q) and E(I)/E(Q), SEs by path batches."""
    burn = ensemble.spec.burn_in
    q = ensemble.total_debt[:, burn:]
    i = ensemble.next_interest[:, burn:]
    if q.size == 0:
        raise ValueError("no post-burn-in samples")

    with np.errstate(invalid="ignore", divide="ignore"):
        per_sample_ratio = np.where(np.isfinite(q) & (q != 0.0), i / q, np.nan)
    per_path_mor = np.nanmean(per_sample_ratio, axis=1)         # per-path mean of I/Q
    per_path_qsum = np.nansum(q, axis=1)
    per_path_isum = np.nansum(i, axis=1)

    valid = np.isfinite(per_path_mor) & (per_path_qsum != 0.0)
    mor = per_path_mor[valid]
    rom_paths = per_path_isum[valid] / per_path_qsum[valid]     # per-path I-sum / Q-sum

    pooled_rom = float(np.nansum(i[valid]) / np.nansum(q[valid]))
    return RatioMetrics(
        mean_of_ratios=float(mor.mean()),
        ratio_of_means=pooled_rom,
        se_mean_of_ratios=batch_means_se(mor, n_batches),
        se_ratio_of_means=batch_means_se(rom_paths, n_batches),
    )
