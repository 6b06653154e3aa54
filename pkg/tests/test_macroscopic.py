"""Tests for the macroscopic ODE tier: right-hand sides, RK4, stationary states."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kinswitch.macroscopic import (
    DegenerateRatesError,
    MacroState,
    UndefinedMeanError,
    integrate_rk4,
    label_switch_rhs,
    mean_rhs,
    stationary_alpha,
    stationary_summary,
    trade_rhs,
)
from kinswitch.model import FrequencyMatrix, RateTable, TransferKernel


def _rates(lam11, lam22, lam12, p12_11, p12_22):
    freq = FrequencyMatrix(np.array([[lam11, lam12], [lam12, lam22]]))
    return RateTable.from_model(freq, TransferKernel.trade(p12_11, p12_22))


TEST1 = _rates(1.0, 10.0, 1.0, 0.5, 0.5)  # b11_12=0.5 b22_12=5 b12_11=0.5 b12_22=0.5
TEST2_II = _rates(1.0, 1.0, 10.0, 0.2, 0.8)  # b12_11=2 b12_22=8 b11_12=b22_12=0.5
CASE_A = MacroState.from_means([0.9, 0.1], [0.5, 10.0])
CASE_B = MacroState.from_means([0.9, 0.1], [10.0, 0.5])


def random_state(rng):
    rho = rng.uniform(0.05, 0.95)
    return MacroState(
        np.array([rho, 1.0 - rho]), np.array([rng.uniform(0.01, 5), rng.uniform(0.01, 5)])
    )


def random_rates(rng):
    p11 = rng.uniform(0.05, 0.9)
    p22 = rng.uniform(0.05, 1.0 - p11)
    return _rates(
        rng.uniform(0.1, 5), rng.uniform(0.1, 5), rng.uniform(0.1, 5), p11, p22
    )


# --- right-hand sides --------------------------------------------------------


def test_symmetric_equilibrium_is_critical_point():
    rates = _rates(1.0, 1.0, 1.0, 0.5, 0.5)  # alpha = 1
    state = MacroState.from_means([0.5, 0.5], [2.0, 2.0])
    assert np.allclose(trade_rhs(state, rates), 0.0, atol=1e-15)


def test_trade_rhs_test1_hand_value():
    out = trade_rhs(CASE_A, TEST1)
    # (5*0.1 + 0.5*0.9)*0.1 - (0.5*0.9 + 0.5*0.1)*0.9 = 0.095 - 0.45
    assert out[0] == pytest.approx(-0.355, abs=1e-15)
    # moments: A*M2 - C*M1 with A=0.95, C=0.5, M=(0.45, 1.0)
    assert out[2] == pytest.approx(0.95 * 1.0 - 0.5 * 0.45, abs=1e-15)


def test_trade_rhs_conserves_sums_exactly():
    rng = np.random.default_rng(2)
    for _ in range(50):
        out = trade_rhs(random_state(rng), random_rates(rng))
        assert out[0] + out[1] == 0.0
        assert out[2] + out[3] == 0.0


def test_mean_rhs_equal_means_at_rest():
    state = MacroState.from_means([0.4, 0.6], [2.0, 2.0])
    assert np.allclose(mean_rhs(state, TEST1), 0.0)


def test_mean_rhs_relaxation_signs():
    rng = np.random.default_rng(3)
    for _ in range(25):
        state = MacroState.from_means(
            [rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)], [1.0, 2.0]
        )
        dm1, dm2 = mean_rhs(state, random_rates(rng))
        assert dm1 > 0 and dm2 < 0  # m2 > m1 pulls m1 up, m2 down


def test_mean_rhs_test1_hand_value():
    dm1, _ = mean_rhs(CASE_A, TEST1)
    assert dm1 == pytest.approx((0.1 / 0.9) * 0.95 * 9.5, rel=1e-12)


def test_mean_rhs_requires_positive_masses():
    state = MacroState(np.array([1.0, 0.0]), np.array([1.0, 0.0]))
    with pytest.raises(UndefinedMeanError):
        mean_rhs(state, TEST1)


def test_mean_dynamics_consistent_with_moment_dynamics():
    """d/dt(M_i/rho_i) from trade_rhs equals mean_rhs (quotient rule)."""
    rng = np.random.default_rng(4)
    for _ in range(50):
        state = random_state(rng)
        rates = random_rates(rng)
        full = trade_rhs(state, rates)
        dm = mean_rhs(state, rates)
        for i in range(2):
            quotient = (full[2 + i] * state.rho[i] - state.M[i] * full[i]) / state.rho[i] ** 2
            assert dm[i] == pytest.approx(quotient, rel=1e-12, abs=1e-12)


# --- RK4 ----------------------------------------------------------------------


def test_rk4_zero_dynamics_is_constant():
    rates = _rates(1.0, 1.0, 1.0, 0.5, 0.5)
    state = MacroState.from_means([0.5, 0.5], [1.0, 1.0])
    _, states = integrate_rk4(state, rates, dt=0.01, t_end=1.0)
    assert np.allclose(states, states[0], atol=1e-14)


def test_rk4_invariant_drift_bounded():
    _, states = integrate_rk4(CASE_A, TEST1, dt=1e-3, t_end=50.0, record_every=100)
    rho_sum = states[:, 0] + states[:, 1]
    M_sum = states[:, 2] + states[:, 3]
    assert np.max(np.abs(rho_sum - 1.0)) <= 1e-10
    assert np.max(np.abs(M_sum - 1.45)) <= 1e-10


def test_rk4_reaches_closed_form_equilibrium():
    _, states = integrate_rk4(CASE_A, TEST1, dt=1e-3, t_end=50.0, record_every=1000)
    summary = stationary_summary(TEST1, CASE_A)
    assert abs(states[-1, 0] - summary.rho_inf[0]) <= 1e-6
    assert abs(states[-1, 2] / states[-1, 0] - summary.m_inf) <= 1e-6


def test_rk4_fourth_order_convergence():
    """Halving dt shrinks the endpoint error ~16x (Richardson vs dt/64 reference)."""
    t_end = 2.0
    dt = 0.02
    ref = integrate_rk4(CASE_A, TEST1, dt=dt / 64, t_end=t_end)[1][-1]
    err = {}
    for f in (1, 2):
        end = integrate_rk4(CASE_A, TEST1, dt=dt / f, t_end=t_end)[1][-1]
        err[f] = np.max(np.abs(end - ref))
    ratio = err[1] / err[2]
    assert 12.0 <= ratio <= 20.0


# --- stationary state ----------------------------------------------------------


def test_stationary_alpha_test1():
    assert stationary_alpha(TEST1) == pytest.approx(math.sqrt(10) / 10, abs=1e-12)


def test_stationary_alpha_test2ii():
    assert stationary_alpha(TEST2_II) == pytest.approx(6.0 + math.sqrt(37), abs=1e-12)


def test_alpha_one_iff_symmetric_condition():
    # P12->11 = P12->22 = 0.5 and lambda_11 = lambda_22 force alpha = 1
    assert stationary_alpha(_rates(3.0, 3.0, 7.0, 0.5, 0.5)) == pytest.approx(1.0, abs=1e-14)
    assert stationary_alpha(_rates(3.0, 4.0, 7.0, 0.5, 0.5)) != pytest.approx(1.0, abs=1e-3)


def test_alpha_ratio_under_uniform_transfer_assumption():
    """With beta_11^12 = beta_12^22 and beta_22^12 = beta_12^11, alpha = b1/b2 exactly."""
    rng = np.random.default_rng(5)
    for _ in range(25):
        b1, b2 = rng.uniform(0.1, 4.0, 2)
        beta = np.zeros((2, 2, 2, 2))
        beta[0, 0, 0, 1] = beta[0, 0, 1, 0] = b1  # beta_11^12
        beta[1, 1, 0, 1] = beta[1, 1, 1, 0] = b2  # beta_22^12
        beta[0, 1, 0, 0] = beta[1, 0, 0, 0] = b2  # beta_12^11
        beta[0, 1, 1, 1] = beta[1, 0, 1, 1] = b1  # beta_12^22
        assert stationary_alpha(RateTable(beta)) == pytest.approx(b1 / b2, rel=1e-14)


def test_degenerate_rates_rejected():
    beta = np.zeros((2, 2, 2, 2))
    beta[0, 0, 0, 1] = beta[0, 0, 1, 0] = 1.0
    with pytest.raises(DegenerateRatesError):
        stationary_alpha(RateTable(beta))


def test_stationary_summary_case_a_and_b():
    sa = stationary_summary(TEST1, CASE_A)
    sb = stationary_summary(TEST1, CASE_B)
    assert sa.m_inf == pytest.approx(1.45, abs=1e-15)
    assert sb.m_inf == pytest.approx(9.05, abs=1e-15)
    assert sa.rho_inf[0] == pytest.approx(1.0 / (1.0 + math.sqrt(10) / 10), abs=1e-12)
    assert sa.rho_inf[0] > sa.rho_inf[1]  # alpha < 1 keeps group 1 larger
    assert not sa.switch_predicted  # rho_2(0) < rho_1(0) and alpha < 1
    assert np.allclose(sa.M_inf, sa.rho_inf * sa.m_inf)


def test_stationary_summary_predicts_switch_for_test2ii():
    s = stationary_summary(TEST2_II, CASE_A)
    assert s.switch_predicted
    s1 = stationary_summary(_rates(1.0, 1.0, 10.0, 0.5, 0.5), CASE_A)
    assert s1.alpha == pytest.approx(1.0, abs=1e-14)
    assert not s1.switch_predicted


def test_stationary_summary_general_total_mass():
    state = MacroState.from_means([1.8, 0.2], [0.5, 10.0])  # rho_bar = 2
    s = stationary_summary(TEST1, state)
    assert s.rho_inf.sum() == pytest.approx(2.0, rel=1e-14)
    assert s.m_inf == pytest.approx((1.8 * 0.5 + 0.2 * 10.0) / 2.0, rel=1e-14)


def test_attractivity_from_random_states():
    rng = np.random.default_rng(6)
    for _ in range(5):
        state0 = random_state(rng)
        rates = random_rates(rng)
        summary = stationary_summary(rates, state0)
        _, states = integrate_rk4(state0, rates, dt=1e-3, t_end=80.0, record_every=10_000)
        target = np.array([*summary.rho_inf, *summary.M_inf])
        assert np.max(np.abs(states[-1] - target)) <= 1e-6


# --- general-n label switch ----------------------------------------------------


def test_label_switch_single_group_is_static():
    beta = np.zeros((1, 1, 1, 1))
    beta[0, 0, 0, 0] = 2.0
    assert label_switch_rhs([1.0], RateTable(beta)) == pytest.approx(0.0)


def test_label_switch_uniform_rates_fix_uniform_state():
    n = 4
    rates = RateTable(np.full((n, n, n, n), 0.3))
    out = label_switch_rhs(np.full(n, 1.0 / n), rates)
    assert np.allclose(out, 0.0, atol=1e-15)


def test_label_switch_conserves_total_mass():
    rng = np.random.default_rng(7)
    for n in (2, 3, 5):
        beta = rng.uniform(0, 1, (n, n, n, n))
        f = rng.dirichlet(np.ones(n))
        out = label_switch_rhs(f, RateTable(beta))
        assert abs(out.sum()) <= 1e-14


def test_label_switch_reduces_to_trade_masses():
    """On the trade-model support the general-n form reproduces the n=2 mass ODEs."""
    rng = np.random.default_rng(8)
    for _ in range(25):
        rates = random_rates(rng)
        state = random_state(rng)
        general = label_switch_rhs(state.rho, rates)
        trade = trade_rhs(state, rates)
        assert general[0] == pytest.approx(trade[0], rel=1e-13, abs=1e-14)
        assert general[1] == pytest.approx(trade[1], rel=1e-13, abs=1e-14)
