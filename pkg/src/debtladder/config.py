"""Model configuration: maturity grid, allocation, drivers, correlation."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .operators import MAX_MATURITY

SIMPLEX_TOL = 1e-12

CORRELATION_MODES = ("independent", "one_factor")


@dataclass(frozen=True)
class ModelConfig:
    """Immutable parameter set for one debt-dynamics instance.

    Vectors are dense over tenors 1..M (index j-1 holds tenor j). Tenors with
    zero allocation still carry rate parameters (interpolated at construction
    via `from_tenor_maps`) so the coupon operators stay well-defined; they
    never influence dynamics, which see rates only through r * f.
    """

    max_maturity: int
    allocation: np.ndarray
    mean_rates: np.ndarray
    rate_vol: np.ndarray
    rate_persistence: np.ndarray
    growth_factor: float
    deficit_mean: float
    deficit_vol: float
    deficit_persistence: float
    correlation: float
    correlation_mode: str = "independent"

    def __post_init__(self):
        m = int(self.max_maturity)
        if m < 1:
            raise ConfigError(f"max_maturity must be >= 1, got {self.max_maturity}")
        if m > MAX_MATURITY:
            raise ConfigError(f"max_maturity {m} exceeds the dense limit {MAX_MATURITY}")
        object.__setattr__(self, "max_maturity", m)

        for name in ("allocation", "mean_rates", "rate_vol", "rate_persistence"):
            vec = np.array(getattr(self, name), dtype=float)
            if vec.shape != (m,):
                raise ConfigError(f"{name} must have length {m}, got shape {vec.shape}")
            if not np.all(np.isfinite(vec)):
                raise ConfigError(f"{name} contains non-finite entries")
            vec.setflags(write=False)
            object.__setattr__(self, name, vec)

        f = self.allocation
        if np.any(f < 0):
            raise ConfigError("allocation weights must be nonnegative")
        total = float(f.sum())
        if abs(total - 1.0) > SIMPLEX_TOL:
            raise ConfigError(f"allocation weights must sum to 1 within {SIMPLEX_TOL:g}, got {total!r}")

        if not self.growth_factor > 1.0:
            raise ConfigError(f"growth_factor must exceed 1, got {self.growth_factor}"
                              " (the no-growth limit is served by no_growth_limits)")
        if np.any(self.rate_vol < 0):
            raise ConfigError("rate_vol entries must be nonnegative")
        if np.any((self.rate_persistence < 0) | (self.rate_persistence >= 1)):
            raise ConfigError("rate_persistence entries must lie in [0, 1)")
        if not self.deficit_mean > 0:
            raise ConfigError(f"deficit_mean must be positive, got {self.deficit_mean}")
        if self.deficit_vol < 0:
            raise ConfigError(f"deficit_vol must be nonnegative, got {self.deficit_vol}")
        if not 0 <= self.deficit_persistence < 1:
            raise ConfigError(f"deficit_persistence must lie in [0, 1), got {self.deficit_persistence}")
        if not -1 < self.correlation < 1:
            raise ConfigError(f"correlation must lie in (-1, 1), got {self.correlation}")
        if self.correlation_mode not in CORRELATION_MODES:
            raise ConfigError(f"correlation_mode must be one of {CORRELATION_MODES},"
                              f" got {self.correlation_mode!r}")

    # -- derived views ----------------------------------------------------

    @property
    def tenors(self) -> np.ndarray:
        """All tenors 1..M."""
        return np.arange(1, self.max_maturity + 1)

    @property
    def issued_mask(self) -> np.ndarray:
        return self.allocation > 0

    @property
    def issued_tenors(self) -> tuple[int, ...]:
        return tuple(int(j) for j in self.tenors[self.issued_mask])

    @property
    def n_issued(self) -> int:
        return int(np.count_nonzero(self.issued_mask))

    @property
    def growth_rate(self) -> float:
        """g = gamma - 1."""
        return self.growth_factor - 1.0

    def replace(self, **changes) -> "ModelConfig":
        return dataclasses.replace(self, **changes)

    def with_allocation(self, weights: dict[int, float] | np.ndarray) -> "ModelConfig":
        """New config with a different allocation over the same grid."""
        if isinstance(weights, dict):
            f = np.zeros(self.max_maturity)
            for tenor, w in weights.items():
                if not 1 <= int(tenor) <= self.max_maturity:
                    raise ConfigError(f"allocation tenor {tenor} outside 1..{self.max_maturity}")
                f[int(tenor) - 1] = float(w)
        else:
            f = np.asarray(weights, dtype=float)
        return self.replace(allocation=f)


def _interpolate_over_tenors(values: dict[int, float], max_maturity: int, name: str) -> np.ndarray:
    """Dense vector over tenors 1..M from a sparse {tenor: value} map.

    Missing tenors take the linear interpolant between the nearest specified
    tenors, flat beyond the ends.
    """
    if not values:
        raise ConfigError(f"{name} must specify at least one tenor")
    known = sorted(values.items())
    for tenor, _ in known:
        if not 1 <= int(tenor) <= max_maturity:
            raise ConfigError(f"{name} tenor {tenor} outside 1..{max_maturity}")
    xs = np.array([float(t) for t, _ in known])
    ys = np.array([float(v) for _, v in known])
    return np.interp(np.arange(1, max_maturity + 1, dtype=float), xs, ys)


def from_tenor_maps(
    max_maturity: int,
    allocation: dict[int, float],
    mean_rates: dict[int, float],
    rate_vol: dict[int, float] | float = 0.0,
    rate_persistence: dict[int, float] | float = 0.0,
    growth_factor: float = 1.08,
    deficit_mean: float = 1.0,
    deficit_vol: float = 0.0,
    deficit_persistence: float = 0.0,
    correlation: float = 0.0,
    correlation_mode: str = "independent",
) -> ModelConfig:
    """Build a ModelConfig from sparse per-tenor maps (the scenario-file form)."""
    m = int(max_maturity)
    f = np.zeros(m)
    for tenor, w in allocation.items():
        if not 1 <= int(tenor) <= m:
            raise ConfigError(f"allocation tenor {tenor} outside 1..{m}")
        f[int(tenor) - 1] = float(w)

    issued = {int(t) for t, w in allocation.items() if w > 0}
    for name, mapping in (("rates.mean", mean_rates),):
        missing = issued - {int(t) for t in mapping}
        if missing:
            raise ConfigError(f"{name} missing for issued tenors {sorted(missing)}")

    def expand(spec, name):
        if isinstance(spec, dict):
            missing = issued - {int(t) for t in spec}
            if missing:
                raise ConfigError(f"{name} missing for issued tenors {sorted(missing)}")
            return _interpolate_over_tenors({int(t): float(v) for t, v in spec.items()}, m, name)
        return np.full(m, float(spec))

    return ModelConfig(
        max_maturity=m,
        allocation=f,
        mean_rates=_interpolate_over_tenors({int(t): float(v) for t, v in mean_rates.items()},
                                            m, "rates.mean"),
        rate_vol=expand(rate_vol, "rates.vol"),
        rate_persistence=expand(rate_persistence, "rates.persistence"),
        growth_factor=float(growth_factor),
        deficit_mean=float(deficit_mean),
        deficit_vol=float(deficit_vol),
        deficit_persistence=float(deficit_persistence),
        correlation=float(correlation),
        correlation_mode=correlation_mode,
    )
