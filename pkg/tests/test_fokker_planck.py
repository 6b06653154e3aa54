"""Tests for the quasi-invariant rules and the analytic Fokker-Planck steady state."""

import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import invgamma

from kinswitch.fokker_planck import (
    DegenerateDiffusionError,
    ParetoParams,
    QuasiInvariantConfig,
    fp_operator_terms,
    fp_stationarity_residual,
    gamma_exponent,
    leading_order_pair,
    qinv_exchange_post_states,
    rescaled_post_state_sampler,
    stationary_density,
)
from kinswitch.metrics import WeightedSample, wasserstein1
from kinswitch.model import ExchangeRule, exchange_post_states

PARAMS = ParetoParams(alpha=1.0, omega1=0.5, omega2=0.5, zeta=0.25, rho_bar=1.0, M_bar=1.45)


# --- quasi-invariant exchange rules -------------------------------------------


def test_epsilon_one_is_identity_rescaling():
    rule = ExchangeRule([0.4, 0.7], 0.1)
    rng = np.random.default_rng(2)
    v = rng.uniform(0, 5, 200)
    w = rng.uniform(0, 5, 200)
    eta = rng.uniform(-1, 1, 200)
    eta2 = rng.uniform(-1, 1, 200)
    base = exchange_post_states(1, 2, v, w, eta, eta2, rule)
    for variant in ("conservative", "nonconservative"):
        cfg = QuasiInvariantConfig(1.0, variant)
        out = qinv_exchange_post_states(1, 2, v, w, eta, eta2, rule, cfg)
        assert np.allclose(out[0], base[0], rtol=0, atol=1e-12)
        assert np.allclose(out[1], base[1], rtol=0, atol=1e-12)


def test_epsilon_zero_freezes_the_state():
    rule = ExchangeRule([0.5, 0.5], 0.1)

    class Frozen:
        epsilon = 0.0
        variant = "conservative"

    v2, w2 = qinv_exchange_post_states(1, 2, 1.0, 3.0, 0.9, -0.4, rule, Frozen())
    assert v2 == pytest.approx(1.0, abs=1e-15)
    assert w2 == pytest.approx(3.0, abs=1e-15)


def test_conservative_rule_hand_value():
    rule = ExchangeRule([0.5, 0.5], 0.0)
    cfg = QuasiInvariantConfig(0.25, "conservative")
    v2, _ = qinv_exchange_post_states(1, 2, 1.0, 3.0, 1.0, 0.0, rule, cfg)
    assert v2 == pytest.approx(1.25 + math.sqrt(0.25 * 0.75), abs=1e-12)  # 1.683013


def test_nonconservative_noise_scale():
    rule = ExchangeRule([0.5, 0.5], 0.2)
    eps = 0.04
    cfg = QuasiInvariantConfig(eps, "nonconservative")
    v, w = 2.0, 2.0  # I - v = 0, so only the noise term moves the state
    v2, _ = qinv_exchange_post_states(1, 1, v, w, 1.0, 0.0, rule, cfg)
    assert v2 == pytest.approx(v + math.sqrt(eps) * 0.2 * v, abs=1e-14)


def test_conservative_variant_moment_preservation():
    """Post-state mean v + eps(I-v) and variance eps(1-eps)(I-v)^2 + eps D^2."""
    rule = ExchangeRule([0.5, 0.5], 0.1)
    eps = 0.25
    cfg = QuasiInvariantConfig(eps, "conservative")
    x, y, v, w = 1, 2, 1.0, 2.0
    I = float(rule.drift(x, y, v, w))
    D = float(rule.spread(x, y, v))
    rng = np.random.default_rng(3)
    n = 10**6
    eta = rng.uniform(-math.sqrt(3), math.sqrt(3), n)
    draws, _ = qinv_exchange_post_states(x, y, np.full(n, v), np.full(n, w), eta, 0.0, rule, cfg)
    mean_exact = v + eps * (I - v)
    var_exact = eps * (1 - eps) * (I - v) ** 2 + eps * D * D
    assert abs(draws.mean() - mean_exact) <= 4 * math.sqrt(var_exact / n)
    assert abs(draws.var() - var_exact) <= 4 * var_exact * math.sqrt(2.0 / n)


def test_quasi_invariant_config_contracts():
    with pytest.raises(ValueError):
        QuasiInvariantConfig(0.0)
    with pytest.raises(ValueError):
        QuasiInvariantConfig(1.5)
    with pytest.raises(ValueError):
        QuasiInvariantConfig(0.5, "other")
    assert QuasiInvariantConfig(1e-3).tau(2000.0) == pytest.approx(2.0)


# --- rescaled sampler family (mixture form) ------------------------------------


def _base_sampler(rule, x, y):
    def sampler(v, w, x_, y_, rng, size):
        eta = rule.noise.sample(rng, size)
        return rule.drift(x, y, v, w) + rule.spread(x, y, v) * eta

    return sampler


def test_rescaled_family_identity_at_eps_one():
    """F1: at eps = 1 the sampled law equals the base kernel's (two-sample W1)."""
    rule = ExchangeRule([0.5, 0.5], 0.1)
    base = _base_sampler(rule, 1, 2)
    rescaled = rescaled_post_state_sampler(base, 1.0)
    rng = np.random.default_rng(4)
    n = 40_000
    a = base(1.0, 2.0, 1, 2, rng, n)
    b = rescaled(1.0, 2.0, 1, 2, rng, n)
    w1 = wasserstein1(WeightedSample.equal_weight(a), WeightedSample.equal_weight(b))
    assert w1 <= 5.0 / math.sqrt(n)  # Monte Carlo band around zero


def test_rescaled_family_collapses_as_eps_vanishes():
    """F2: W1 against the pre-state point mass -> 0 with eps."""
    rule = ExchangeRule([0.5, 0.5], 0.1)
    base = _base_sampler(rule, 1, 2)
    rng = np.random.default_rng(5)
    v = 1.0
    point = WeightedSample.equal_weight([v])
    last = None
    for eps in (0.5, 0.1, 0.02, 0.004):
        draws = rescaled_post_state_sampler(base, eps)(v, 2.0, 1, 2, rng, 50_000)
        w1 = wasserstein1(WeightedSample.equal_weight(draws), point)
        if last is not None:
            assert w1 < last
        last = w1
    assert last <= 0.01


# --- gamma and the steady density ----------------------------------------------


def test_gamma_exponent_formula():
    # B = 2*0.5 + 0.5*(1+1) = 2, D = 0.25*4/2 = 0.5
    p = ParetoParams(alpha=1.0, omega1=0.5, omega2=0.5, zeta=0.5)
    assert gamma_exponent(p) == pytest.approx(4.0, abs=1e-14)
    assert p.pareto_index == pytest.approx(5.0, abs=1e-14)


def test_gamma_equal_propensities_reduce_to_single_population():
    rng = np.random.default_rng(6)
    for _ in range(20):
        om = rng.uniform(0.05, 0.95)
        zeta = rng.uniform(0.05, 0.5)
        alpha = rng.uniform(0.2, 5.0)
        p = ParetoParams(alpha=alpha, omega1=om, omega2=om, zeta=zeta)
        assert gamma_exponent(p) == pytest.approx(2 * om / zeta**2, rel=1e-12)


def test_gamma_requires_fluctuations():
    with pytest.raises(DegenerateDiffusionError):
        gamma_exponent(ParetoParams(alpha=1.0, omega1=0.5, omega2=0.5, zeta=0.0))


@pytest.mark.parametrize(
    "params",
    [
        PARAMS,
        ParetoParams(alpha=2.5, omega1=0.3, omega2=0.6, zeta=0.2, rho_bar=1.0, M_bar=2.0),
        ParetoParams(alpha=0.4, omega1=0.5, omega2=0.5, zeta=0.5, rho_bar=2.0, M_bar=1.0),
    ],
)
def test_steady_density_quadrature_mass_and_mean(params):
    mass, _ = quad(lambda v: stationary_density(v, params), 0, np.inf)
    mean, _ = quad(lambda v: v * stationary_density(v, params), 0, np.inf)
    assert abs(mass - params.rho_bar / (1 + params.alpha)) <= 1e-8
    assert abs(mean - params.M_bar / (1 + params.alpha)) <= 1e-8


def test_steady_density_matches_invgamma_closed_form():
    g = gamma_exponent(PARAMS)
    v = np.geomspace(0.05, 30, 200)
    ours = stationary_density(v, PARAMS)
    ref = PARAMS.mass1 * invgamma(g + 1.0, scale=g * PARAMS.m_bar).pdf(v)
    assert np.allclose(ours, ref, rtol=1e-12)


def test_steady_density_mode_location():
    g = gamma_exponent(PARAMS)
    mode = g * PARAMS.m_bar / (g + 2.0)
    h = 1e-5 * mode
    up = stationary_density(mode + h, PARAMS) - stationary_density(mode, PARAMS)
    down = stationary_density(mode, PARAMS) - stationary_density(mode - h, PARAMS)
    assert down > 0 > up  # derivative changes sign at the mode


def test_steady_density_rejects_nonpositive_wealth():
    with pytest.raises(ValueError):
        stationary_density(0.0, PARAMS)


def test_leading_order_pair_scaling():
    f1 = stationary_density(np.geomspace(0.1, 10, 50), PARAMS)
    assert np.allclose(leading_order_pair(f1, 1.0), f1)
    f2 = leading_order_pair(f1, 0.7)
    assert np.allclose(f2, 0.7 * f1, rtol=1e-15)
    alpha = math.sqrt(10) / 10  # ratio of the order-zero masses
    p = ParetoParams(alpha=alpha, omega1=0.5, omega2=0.5, zeta=0.25)
    rho1 = p.mass1
    rho2 = alpha * rho1
    assert rho2 / rho1 == pytest.approx(alpha, abs=1e-12)
    assert rho1 + rho2 == pytest.approx(p.rho_bar, abs=1e-12)


# --- stationarity residual -------------------------------------------------------


def _residual_scale(params, grid):
    drift, diffusion = fp_operator_terms(params, grid)
    return max(np.abs(drift).max(), np.abs(diffusion).max())


def test_analytic_density_annihilates_fp_operator():
    grid = np.geomspace(0.05 * PARAMS.m_bar, 20 * PARAMS.m_bar, 120)
    residual = fp_stationarity_residual(PARAMS, grid)
    assert residual <= 1e-6 * _residual_scale(PARAMS, grid)


def test_fp_residual_beta_scales_linearly():
    grid = np.geomspace(0.1, 10, 40)
    r1 = fp_stationarity_residual(PARAMS, grid, beta12=1.0)
    r2 = fp_stationarity_residual(PARAMS, grid, beta12=2.0)
    assert r2 == pytest.approx(2 * r1, rel=1e-9)


def test_perturbed_density_lights_up_the_residual():
    """The residual metric separates the true steady state from a ringer."""
    grid = np.geomspace(0.05 * PARAMS.m_bar, 20 * PARAMS.m_bar, 120)
    floor = fp_stationarity_residual(PARAMS, grid)
    ringer = lambda v: stationary_density(v, PARAMS) * (1.0 + 0.1 * np.sin(v))
    assert fp_stationarity_residual(PARAMS, grid, density=ringer) > 1e4 * floor


def test_zero_function_has_zero_residual():
    zero = lambda v: np.zeros_like(np.asarray(v, dtype=float))
    assert fp_stationarity_residual(PARAMS, np.geomspace(0.1, 10, 30), density=zero) == 0.0


# --- Pareto tail -------------------------------------------------------------------


def test_local_log_slope_formula():
    """d ln f / d ln v = -(2 + gamma) + gamma*m_bar/v, checked by differences."""
    g = gamma_exponent(PARAMS)
    for v in (10 * PARAMS.m_bar, 40 * PARAMS.m_bar, 100 * PARAMS.m_bar):
        h = 1e-6 * v
        num = (
            math.log(stationary_density(v + h, PARAMS))
            - math.log(stationary_density(v - h, PARAMS))
        ) / (math.log(v + h) - math.log(v - h))
        assert num == pytest.approx(-(2 + g) + g * PARAMS.m_bar / v, rel=1e-6)


def test_far_tail_slope_matches_pareto_exponent():
    g = gamma_exponent(PARAMS)
    v = np.geomspace(100 * PARAMS.m_bar, 1000 * PARAMS.m_bar, 60)
    slope = np.polyfit(np.log(v), np.log(stationary_density(v, PARAMS)), 1)[0]
    assert abs(slope + (2 + g)) / (2 + g) <= 0.01
