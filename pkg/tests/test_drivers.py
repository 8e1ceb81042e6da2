from __future__ import annotations

import numpy as np
import pytest
from scipy import stats

import debtladder as dl
from debtladder.drivers import (
    build_joint_covariance,
    folded_normal_mean,
    initial_driver_state,
    stationary_moments,
    step_drivers,
)


def test_stationary_moments_closed_forms(baseline_config):
    cfg = baseline_config
    m = stationary_moments(cfg)
    np.testing.assert_allclose(m.rate_means, cfg.mean_rates)
    np.testing.assert_allclose(
        m.rate_stationary_sd, cfg.rate_vol / np.sqrt(1.0 - cfg.rate_persistence**2))
    assert m.deficit_mean == cfg.deficit_mean
    assert m.deficit_stationary_sd == pytest.approx(
        cfg.deficit_vol / np.sqrt(1.0 - cfg.deficit_persistence**2))
    expected_cross = (cfg.correlation * cfg.deficit_vol * cfg.rate_vol
                      / (1.0 - cfg.rate_persistence * cfg.deficit_persistence))
    np.testing.assert_allclose(m.cross_cov, expected_cross)
    np.testing.assert_allclose(m.innovation_cov,
                               cfg.correlation * cfg.deficit_vol * cfg.rate_vol)
    # baseline rho < 0, so level cross-covariances are negative at issued tenors
    assert np.all(m.cross_cov[cfg.issued_mask] < 0)


def test_folded_normal_zero_sd_is_abs():
    mu = np.array([-0.3, 0.0, 0.7])
    sd = np.zeros(3)
    np.testing.assert_allclose(folded_normal_mean(mu, sd), np.abs(mu))


def test_folded_normal_against_scipy_foldnorm():
    rng = np.random.default_rng(7)
    mu = rng.normal(0.0, 0.1, size=40)
    sd = rng.uniform(1e-4, 0.2, size=40)
    got = folded_normal_mean(mu, sd)
    # scipy's folded normal takes c = |mu|/sd and scale sd; E|X| is symmetric in mu
    want = np.array([stats.foldnorm.mean(abs(m) / s, scale=s) for m, s in zip(mu, sd)])
    np.testing.assert_allclose(got, want, rtol=1e-12)


def test_folded_normal_dominates_mean_and_collapses_far_from_zero():
    mu = np.array([0.05, 0.05, 5.0])
    sd = np.array([0.05, 0.2, 0.01])
    out = folded_normal_mean(mu, sd)
    assert np.all(out >= np.abs(mu) - 1e-15)
    assert out[2] == pytest.approx(5.0, abs=1e-12)
    # more noise around a mean near zero pushes E|X| further above |mu|
    assert out[1] > out[0]


def test_joint_covariance_independent_structure(baseline_config):
    cfg = baseline_config
    fac = build_joint_covariance(cfg)
    assert fac.mode == "independent"
    issued = np.flatnonzero(cfg.issued_mask)
    np.testing.assert_array_equal(fac.issued_idx, issued)
    sigma = cfg.rate_vol[issued]
    k = issued.size
    assert fac.cov.shape == (k + 1, k + 1)
    assert fac.cov[0, 0] == pytest.approx(cfg.deficit_vol**2)
    np.testing.assert_allclose(fac.cov[0, 1:], cfg.correlation * cfg.deficit_vol * sigma)
    np.testing.assert_allclose(fac.cov, fac.cov.T)
    # rates are mutually independent: the rate block is diagonal
    rate_block = fac.cov[1:, 1:]
    np.testing.assert_allclose(rate_block, np.diag(sigma**2))
    np.testing.assert_allclose(fac.factor @ fac.factor.T, fac.cov, atol=1e-14)


def test_joint_covariance_rejects_infeasible_correlation(baseline_config):
    # three issued tenors with positive vols: |rho| must not exceed 1/sqrt(3)
    cfg = baseline_config.replace(correlation=0.9)
    with pytest.raises(dl.ConfigError) as exc:
        build_joint_covariance(cfg)
    msg = str(exc.value)
    assert "one_factor" in msg
    assert "0.57735" in msg  # the binding |rho| bound is spelled out


def test_joint_covariance_boundary_correlation_accepted(baseline_config):
    cfg = baseline_config.replace(correlation=1.0 / np.sqrt(3.0))
    fac = build_joint_covariance(cfg)
    np.testing.assert_allclose(fac.factor @ fac.factor.T, fac.cov, atol=1e-12)
    vals = np.linalg.eigvalsh(fac.cov)
    assert np.all(vals >= -1e-15)


def test_joint_covariance_one_factor_structure(baseline_config):
    # the same rho = 0.9 that is infeasible under independence is fine here
    cfg = baseline_config.replace(correlation=0.9, correlation_mode="one_factor")
    fac = build_joint_covariance(cfg)
    assert fac.mode == "one_factor"
    sigma = cfg.rate_vol[fac.issued_idx]
    rate_block = fac.cov[1:, 1:]
    np.testing.assert_allclose(np.diag(rate_block), sigma**2)
    off = rate_block - np.diag(np.diag(rate_block))
    expected_off = 0.81 * np.outer(sigma, sigma)
    expected_off -= np.diag(np.diag(expected_off))
    np.testing.assert_allclose(off, expected_off)
    np.testing.assert_allclose(fac.factor @ fac.factor.T, fac.cov, atol=1e-14)


def test_joint_covariance_factor_random_configs():
    rng = np.random.default_rng(11)
    for _ in range(25):
        k = int(rng.integers(1, 5))
        m = k + int(rng.integers(0, 3))
        issued = np.sort(rng.choice(m, size=k, replace=False))
        f = np.zeros(m)
        f[issued] = rng.dirichlet(np.ones(k))
        vol = np.zeros(m)
        vol[issued] = rng.uniform(0.0, 0.02, size=k)
        mode = "independent" if rng.random() < 0.5 else "one_factor"
        rho = float(rng.uniform(-1, 1))
        if mode == "independent":
            rho *= 1.0 / np.sqrt(k)
        cfg = dl.ModelConfig(
            max_maturity=m, allocation=f,
            mean_rates=rng.uniform(0.0, 0.1, size=m),
            rate_vol=vol, rate_persistence=np.full(m, 0.9),
            growth_factor=1.05, deficit_mean=1.0, deficit_vol=0.1,
            deficit_persistence=0.9, correlation=rho, correlation_mode=mode)
        fac = build_joint_covariance(cfg)
        np.testing.assert_allclose(fac.factor @ fac.factor.T, fac.cov, atol=1e-13)


def test_initial_driver_state_scalar_and_batched(baseline_config):
    st = initial_driver_state(baseline_config)
    np.testing.assert_array_equal(st.rates, baseline_config.mean_rates)
    assert isinstance(st.deficit, float)
    assert st.deficit == baseline_config.deficit_mean

    st4 = initial_driver_state(baseline_config, paths=4)
    assert st4.rates.shape == (4, baseline_config.max_maturity)
    assert np.asarray(st4.deficit).shape == (4,)
    np.testing.assert_array_equal(st4.rates[2], baseline_config.mean_rates)


def test_step_drivers_zero_innovation_mean_reverts(baseline_config):
    cfg = baseline_config
    fac = build_joint_covariance(cfg)
    k = fac.issued_idx.size
    rates0 = cfg.mean_rates + 0.01
    state = dl.DriverState(rates=rates0, deficit=cfg.deficit_mean + 0.5)
    nxt = step_drivers(state, np.zeros(k + 1), cfg, fac)
    np.testing.assert_allclose(
        nxt.rates, cfg.mean_rates + cfg.rate_persistence * 0.01, atol=1e-15)
    assert nxt.deficit == pytest.approx(
        cfg.deficit_mean + cfg.deficit_persistence * 0.5)
    assert isinstance(nxt.deficit, float)


def test_step_drivers_batched_shapes(baseline_config):
    cfg = baseline_config
    fac = build_joint_covariance(cfg)
    k = fac.issued_idx.size
    state = initial_driver_state(cfg, paths=6)
    rng = np.random.default_rng(0)
    nxt = step_drivers(state, rng.standard_normal((6, k + 1)), cfg, fac)
    assert nxt.rates.shape == (6, cfg.max_maturity)
    assert np.asarray(nxt.deficit).shape == (6,)


def test_step_drivers_rejects_wrong_gaussian_width(baseline_config):
    cfg = baseline_config
    fac = build_joint_covariance(cfg)
    state = initial_driver_state(cfg)
    with pytest.raises(dl.ConfigError, match="last dimension"):
        step_drivers(state, np.zeros(fac.issued_idx.size + 2), cfg, fac)


def test_step_drivers_non_issued_tenors_stay_deterministic(baseline_config):
    cfg = baseline_config
    fac = build_joint_covariance(cfg)
    k = fac.issued_idx.size
    rng = np.random.default_rng(5)
    state = dl.DriverState(rates=cfg.mean_rates + 0.02, deficit=cfg.deficit_mean)
    quiet = ~cfg.issued_mask
    offset = 0.02
    for _ in range(10):
        state = step_drivers(state, rng.standard_normal(k + 1), cfg, fac)
        offset = cfg.rate_persistence[quiet] * offset
        np.testing.assert_allclose(state.rates[quiet],
                                   cfg.mean_rates[quiet] + offset, atol=1e-15)


def test_chain_matches_stationary_law(baseline_config):
    # long seeded chain: sample moments against the closed-form stationary law
    cfg = baseline_config
    fac = build_joint_covariance(cfg)
    mom = stationary_moments(cfg)
    k = fac.issued_idx.size
    rng = np.random.default_rng(123)
    paths, steps = 400, 600
    state = initial_driver_state(cfg, paths=paths)
    for _ in range(steps):
        state = step_drivers(state, rng.standard_normal((paths, k + 1)), cfg, fac)
    rates = state.rates[:, fac.issued_idx]
    deficit = np.asarray(state.deficit)

    se_r = mom.rate_stationary_sd[fac.issued_idx] / np.sqrt(paths)
    assert np.all(np.abs(rates.mean(axis=0) - cfg.mean_rates[fac.issued_idx]) < 4 * se_r)
    np.testing.assert_allclose(rates.std(axis=0, ddof=1),
                               mom.rate_stationary_sd[fac.issued_idx], rtol=0.15)
    assert abs(deficit.mean() - cfg.deficit_mean) < 4 * mom.deficit_stationary_sd / np.sqrt(paths)
    assert deficit.std(ddof=1) == pytest.approx(mom.deficit_stationary_sd, rel=0.15)

    # level cross-covariance Cov(r_j, D) = rho varsigma sigma_j / (1 - phi_j psi)
    want = mom.cross_cov[fac.issued_idx]
    got = np.array([np.cov(rates[:, j], deficit)[0, 1] for j in range(k)])
    np.testing.assert_allclose(got, want, rtol=0.5)
    assert np.all(got < 0)  # baseline rho is negative
