from __future__ import annotations

import numpy as np
import pytest

import debtladder as dl
from oracles import random_config_params


@pytest.fixture(scope="session")
def baseline() -> dl.Scenario:
    return dl.baseline_scenario()


@pytest.fixture(scope="session")
def baseline_config(baseline) -> dl.ModelConfig:
    return baseline.config


def params_to_config(params, **extra) -> dl.ModelConfig:
    """Bridge a raw oracle parameter draw into a ModelConfig."""
    f = np.zeros(params["max_maturity"])
    f[params["issued"] - 1] = params["weights"]
    f = f / f.sum()
    defaults = dict(
        max_maturity=params["max_maturity"],
        allocation=f,
        mean_rates=params["rates"],
        rate_vol=np.zeros(params["max_maturity"]),
        rate_persistence=np.zeros(params["max_maturity"]),
        growth_factor=params["gamma"],
        deficit_mean=params["deficit"],
        deficit_vol=0.0,
        deficit_persistence=0.0,
        correlation=0.0,
    )
    defaults.update(extra)
    return dl.ModelConfig(**defaults)


def random_configs(seed, count, require_phi_below=None, **extra):
    """Deterministic stream of random valid configs, optionally Phi-filtered."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        cfg = params_to_config(random_config_params(rng), **extra)
        if require_phi_below is not None and dl.feedback_phi(cfg) >= require_phi_below:
            continue
        out.append(cfg)
    return out
