from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import debtladder as dl
from debtladder.cashflow import (
    CashflowState,
    companion_pair,
    issuance_column,
    sre_step,
    state_to_portfolio,
    step_arrays,
)
from debtladder.operators import build_operators, coupon_stream


def test_issuance_column_structure(baseline_config):
    cfg = baseline_config
    col = issuance_column(cfg.mean_rates, cfg)
    m = cfg.max_maturity
    assert col.shape == (2 * m,)
    np.testing.assert_array_equal(col[:m], cfg.allocation)
    # coupon block: entry k is sum_{j >= k} r_j f_j
    rf = cfg.mean_rates * cfg.allocation
    np.testing.assert_allclose(col[m:], np.flip(np.cumsum(np.flip(rf))))


def test_phi_is_discounted_issuance_column(baseline_config):
    cfg = baseline_config
    ops = build_operators(cfg.growth_factor, cfg.max_maturity)
    doubled_disc = np.concatenate([ops.discount_row, ops.discount_row])
    rng = np.random.default_rng(3)
    for _ in range(20):
        r = rng.uniform(0.0, 0.12, size=cfg.max_maturity)
        via_column = float(doubled_disc @ issuance_column(r, cfg)) / cfg.growth_factor
        assert via_column == pytest.approx(dl.feedback_phi(cfg, r), abs=1e-14)


def test_companion_pair_structure(baseline_config):
    cfg = baseline_config
    m = cfg.max_maturity
    ops = build_operators(cfg.growth_factor, m)
    pair = companion_pair(cfg.mean_rates, 1.3, cfg, ops)
    col = issuance_column(cfg.mean_rates, cfg)
    want = (ops.doubled_shift + np.outer(col, ops.selector)) / cfg.growth_factor
    np.testing.assert_allclose(pair.companion, want)
    np.testing.assert_allclose(pair.forcing, 1.3 * col)
    # the companion reads the state only through slots 1 and M+1
    touched = np.flatnonzero(np.abs(pair.companion - ops.doubled_shift / cfg.growth_factor).sum(axis=0))
    np.testing.assert_array_equal(touched, [0, m])


def test_sre_step_agrees_with_matrix_form(baseline_config):
    cfg = baseline_config
    m = cfg.max_maturity
    ops = build_operators(cfg.growth_factor, m)
    rng = np.random.default_rng(9)
    state = CashflowState(principal=rng.uniform(0, 2, m), coupon=rng.uniform(0, 0.1, m))
    for _ in range(50):
        r = rng.uniform(0.0, 0.12, size=m)
        d = float(rng.normal(1.0, 0.3))
        # check=True raises if the O(M) and O(M^2) forms drift past 1e-12
        nxt, n = sre_step(state, r, d, cfg, ops=ops, check=True)
        pair = companion_pair(r, d, cfg, ops)
        np.testing.assert_allclose(nxt.stacked(),
                                   pair.companion @ state.stacked() + pair.forcing,
                                   atol=1e-13)
        assert n == pytest.approx(
            (state.principal[0] + state.coupon[0]) / cfg.growth_factor + d)
        state = nxt


def test_check_mode_requires_operator_bundle(baseline_config):
    state = CashflowState.zero(baseline_config.max_maturity)
    with pytest.raises(dl.ConfigError, match="operator bundle"):
        sre_step(state, baseline_config.mean_rates, 1.0, baseline_config, check=True)


@settings(max_examples=40, deadline=None)
@given(lam=st.floats(0.0, 1.0), seed=st.integers(0, 10_000))
def test_step_is_affine_in_the_state(lam, seed):
    # Y' = B Y + d: stepping an affine mix of states equals the affine mix
    # of the stepped states when the drivers coincide
    rng = np.random.default_rng(seed)
    m = 6
    f = rng.dirichlet(np.ones(m))
    cfg = dl.ModelConfig(
        max_maturity=m, allocation=f, mean_rates=rng.uniform(0, 0.1, m),
        rate_vol=np.zeros(m), rate_persistence=np.zeros(m),
        growth_factor=float(rng.uniform(1.01, 1.2)), deficit_mean=1.0,
        deficit_vol=0.0, deficit_persistence=0.0, correlation=0.0)
    y1 = CashflowState(principal=rng.uniform(0, 3, m), coupon=rng.uniform(0, 0.2, m))
    y2 = CashflowState(principal=rng.uniform(0, 3, m), coupon=rng.uniform(0, 0.2, m))
    mix = CashflowState(principal=lam * y1.principal + (1 - lam) * y2.principal,
                        coupon=lam * y1.coupon + (1 - lam) * y2.coupon)
    r = rng.uniform(0, 0.1, m)
    d = float(rng.normal(1.0, 0.2))
    s1, n1 = sre_step(y1, r, d, cfg)
    s2, n2 = sre_step(y2, r, d, cfg)
    sm, nm = sre_step(mix, r, d, cfg)
    np.testing.assert_allclose(sm.stacked(), lam * s1.stacked() + (1 - lam) * s2.stacked(),
                               atol=1e-12)
    assert nm == pytest.approx(lam * n1 + (1 - lam) * n2, abs=1e-12)


def test_constant_driver_fixed_point_is_exact(baseline_config):
    # Y = B Y + d at mean drivers: the solved state must be literally invariant
    cfg = baseline_config
    m = cfg.max_maturity
    ops = build_operators(cfg.growth_factor, m)
    pair = companion_pair(cfg.mean_rates, cfg.deficit_mean, cfg, ops)
    y = np.linalg.solve(np.eye(2 * m) - pair.companion, pair.forcing)
    state = CashflowState.from_stacked(y)

    met = dl.steady_metrics(cfg)
    np.testing.assert_allclose(state.principal, met.q_levels, rtol=1e-12)
    view = state_to_portfolio(state)
    assert view.total_debt == pytest.approx(met.total_debt, rel=1e-12)
    assert view.next_interest == pytest.approx(met.wac * met.total_debt, rel=1e-12)

    nxt, n = sre_step(state, cfg.mean_rates, cfg.deficit_mean, cfg, ops=ops, check=True)
    assert n == pytest.approx(met.n_infinity, rel=1e-12)
    np.testing.assert_allclose(nxt.stacked(), y, rtol=1e-12, atol=1e-14)


def test_zero_start_path_matches_ladder_recursion(baseline_config):
    # drive both representations with the same random rates/deficits from an
    # empty book; principal ladders and issuance must agree step by step
    cfg = baseline_config
    m = cfg.max_maturity
    rng = np.random.default_rng(21)
    horizon = 200
    rates = cfg.mean_rates + rng.normal(0, 0.01, size=(horizon, m))
    deficits = cfg.deficit_mean + rng.normal(0, 0.2, size=horizon)

    traj = dl.simulate_deterministic(cfg, horizon, rates_path=rates, deficits_path=deficits)

    state = CashflowState.zero(m)
    for t in range(horizon):
        state, n = sre_step(state, rates[t], float(deficits[t]), cfg)
        assert n == pytest.approx(traj.normalized_issuance[t], rel=1e-12, abs=1e-14)
        np.testing.assert_allclose(state.principal, traj.normalized_states[t],
                                   rtol=1e-12, atol=1e-14)


def test_step_arrays_broadcasts_over_paths(baseline_config):
    cfg = baseline_config
    m = cfg.max_maturity
    rng = np.random.default_rng(2)
    p = rng.uniform(0, 2, size=(5, m))
    c = rng.uniform(0, 0.1, size=(5, m))
    r = rng.uniform(0, 0.1, size=(5, m))
    d = rng.normal(1.0, 0.2, size=5)
    bp, bc, bn = step_arrays(p, c, r, d, cfg)
    for i in range(5):
        sp, sc, sn = step_arrays(p[i], c[i], r[i], float(d[i]), cfg)
        np.testing.assert_array_equal(bp[i], sp)
        np.testing.assert_array_equal(bc[i], sc)
        assert bn[i] == sn


def test_divergence_guard_trips(baseline_config):
    state = CashflowState(principal=np.full(baseline_config.max_maturity, 1e13),
                          coupon=np.zeros(baseline_config.max_maturity))
    with pytest.raises(dl.DivergenceError, match="guard"):
        sre_step(state, baseline_config.mean_rates, 1.0, baseline_config)


def test_state_round_trip_and_validation():
    state = CashflowState(principal=np.array([1.0, 2.0]), coupon=np.array([0.1, 0.2]))
    back = CashflowState.from_stacked(state.stacked())
    np.testing.assert_array_equal(back.principal, state.principal)
    np.testing.assert_array_equal(back.coupon, state.coupon)
    with pytest.raises(dl.ConfigError, match="shapes differ"):
        CashflowState(principal=np.zeros(3), coupon=np.zeros(4))


def test_portfolio_view_on_empty_book():
    view = state_to_portfolio(CashflowState.zero(4))
    assert view.total_debt == 0.0
    assert view.shares is None
    assert view.rollover is None
    assert view.next_interest == 0.0


def test_portfolio_view_reads_ladder(baseline_config):
    p = np.array([2.0, 1.0, 1.0])
    c = np.array([0.3, 0.1, 0.05])
    view = state_to_portfolio(CashflowState(principal=p, coupon=c))
    assert view.total_debt == 4.0
    assert view.next_interest == 0.3
    np.testing.assert_allclose(view.shares, p / 4.0)
    assert view.rollover == 0.5
    assert view.shares.sum() == pytest.approx(1.0)
