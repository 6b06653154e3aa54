"""Quasi-invariant machinery: rescaled interaction rules, the analytic
steady state of the reduced Fokker-Planck equation, and its Pareto index.

Two rescalings of the wealth update are supported. With I = I_xy(v, w) and
D = D_xy(v) the base-rule drift and spread:

    conservative     v' = v + eps (I - v) + sqrt(eps (1-eps) (I-v)^2 + eps D^2) eta
    nonconservative  v' = v + eps (I - v) + sqrt(eps) D eta

Both reduce to the plain exchange rule at eps = 1; the conservative form also
preserves the second-moment evolution across eps. The label-switch process is
left unrescaled, and on the slow time scale tau = eps t the group-1 wealth
density relaxes to a mass-scaled inverse-gamma profile with shape gamma + 1
and scale gamma * m_bar, where gamma = B / D with B = 2 omega_1 +
omega_2 (1 + alpha) and D = zeta^2 (3 + alpha) / 2. Its Pareto index is
gamma + 1.

The first-order corrections to the group masses and means vanish, so the
order-zero masses and means already sit at their equilibrium values; only
the leading-order densities are represented here (leading_order_pair ties
the two groups together as f2 = alpha * f1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ExchangeRule

__all__ = [
    "QuasiInvariantConfig",
    "ParetoParams",
    "DegenerateDiffusionError",
    "qinv_exchange_post_states",
    "gamma_exponent",
    "stationary_density",
    "leading_order_pair",
    "fp_operator_terms",
    "fp_stationarity_residual",
    "rescaled_post_state_sampler",
]

VARIANTS = ("conservative", "nonconservative")


class DegenerateDiffusionError(ValueError):
    """gamma needs zeta > 0; with no fluctuations the diffusion term vanishes."""


@dataclass(frozen=True)
class QuasiInvariantConfig:
    """Strength and flavour of the quasi-invariant rescaling.

    epsilon must lie in (0, 1]; time_scaling marks that reported times should
    also be given on the slow scale tau = epsilon * t.
    """

    epsilon: float
    variant: str = "nonconservative"
    time_scaling: bool = True

    def __post_init__(self):
        if not (0.0 < self.epsilon <= 1.0):
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")

    def tau(self, t: float) -> float:
        return self.epsilon * t


def _qinv_one_side(v, drift_target, spread, eta, eps: float, variant: str):
    v = np.asarray(v, dtype=float)
    gap = np.asarray(drift_target, dtype=float) - v
    if variant == "conservative":
        amp = np.sqrt(eps * (1.0 - eps) * gap * gap + eps * np.asarray(spread) ** 2)
    else:
        amp = math.sqrt(eps) * np.asarray(spread)
    return v + eps * gap + amp * np.asarray(eta)


def qinv_exchange_post_states(x, y, v, w, eta, eta_star, rule: ExchangeRule, cfg):
    """Post-interaction wealths under the rescaled exchange rule.

    cfg may be a QuasiInvariantConfig or any object with epsilon/variant
    fields; eps = 1 reproduces exchange_post_states exactly for either
    variant. The formula itself is also well defined at eps = 0, where the
    state is left untouched.
    """
    eps = cfg.epsilon
    variant = cfg.variant
    if not (0.0 <= eps <= 1.0):
        raise ValueError(f"epsilon must lie in [0, 1], got {eps}")
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    v2 = _qinv_one_side(v, rule.drift(x, y, v, w), rule.spread(x, y, v), eta, eps, variant)
    w2 = _qinv_one_side(w, rule.drift(y, x, w, v), rule.spread(x, y, w), eta_star, eps, variant)
    return v2, w2


@dataclass(frozen=True)
class ParetoParams:
    """Inputs of the analytic steady state of the reduced Fokker-Planck equation."""

    alpha: float
    omega1: float
    omega2: float
    zeta: float
    rho_bar: float = 1.0
    M_bar: float = 1.0

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if not (0 <= self.omega1 <= 1 and 0 <= self.omega2 <= 1):
            raise ValueError("omega_i must lie in [0, 1]")
        if self.zeta < 0:
            raise ValueError("zeta must be >= 0")
        if self.rho_bar <= 0 or self.M_bar <= 0:
            raise ValueError("rho_bar and M_bar must be positive")

    @property
    def m_bar(self) -> float:
        return self.M_bar / self.rho_bar

    @property
    def drift_coeff(self) -> float:
        """B = 2 omega_1 + omega_2 (1 + alpha)."""
        return 2.0 * self.omega1 + self.omega2 * (1.0 + self.alpha)

    @property
    def diffusion_coeff(self) -> float:
        """D = zeta^2 (3 + alpha) / 2."""
        return self.zeta**2 * (3.0 + self.alpha) / 2.0

    @property
    def mass1(self) -> float:
        """Equilibrium group-1 mass rho_bar / (1 + alpha)."""
        return self.rho_bar / (1.0 + self.alpha)

    @property
    def pareto_index(self) -> float:
        return gamma_exponent(self) + 1.0


def gamma_exponent(params: ParetoParams) -> float:
    """Tail exponent gamma = B / D; the Pareto index of either group is gamma + 1.

    With omega_1 = omega_2 = omega this collapses to 2 omega / zeta^2 for any
    alpha, the familiar single-population value.
    """
    if params.zeta <= 0:
        raise DegenerateDiffusionError("gamma requires zeta > 0")
    return params.drift_coeff / params.diffusion_coeff


def stationary_density(v, params: ParetoParams):
    """Steady group-1 wealth density: mass-scaled inverse-gamma profile.

    The shape v^(-(2+gamma)) exp(-gamma m_bar / v), normalized as an
    inverse-gamma with shape gamma + 1 and scale gamma * m_bar, then scaled
    by the equilibrium mass rho_bar / (1 + alpha). By construction it
    integrates to that mass and carries mean M_bar / (1 + alpha).
    """
    v = np.asarray(v, dtype=float)
    if np.any(v <= 0):
        raise ValueError("the steady density lives on v > 0")
    gamma = gamma_exponent(params)
    shape = gamma + 1.0
    scale = gamma * params.m_bar
    log_pdf = shape * math.log(scale) - math.lgamma(shape) - (shape + 1.0) * np.log(v) - scale / v
    return params.mass1 * np.exp(log_pdf)


def leading_order_pair(f1_values, alpha: float):
    """Leading-order group-2 density from the group-1 one: f2 = alpha * f1.

    Consequently masses and first moments scale the same way, pinning the
    order-zero fields to their equilibrium values.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return alpha * np.asarray(f1_values, dtype=float)


def _stencil_d1(g, v, h):
    return (g(v - 2 * h) - 8.0 * g(v - h) + 8.0 * g(v + h) - g(v + 2 * h)) / (12.0 * h)


def _stencil_d2(g, v, h):
    return (
        -g(v - 2 * h) + 16.0 * g(v - h) - 30.0 * g(v) + 16.0 * g(v + h) - g(v + 2 * h)
    ) / (12.0 * h * h)


def fp_operator_terms(
    params: ParetoParams, grid, beta12: float = 1.0, h_rel: float = 5e-3, density=None
):
    """Drift and diffusion terms of the reduced Fokker-Planck operator.

    Applied on `grid` (strictly inside (0, inf)) with 5th-order-accurate
    central stencils whose step scales with v. `density(v)` defaults to the
    analytic steady profile, for which drift + diffusion vanishes up to
    finite-difference noise; pass any other density to probe how far from
    stationarity it is. Returns (drift_term, diffusion_term).
    """
    v = np.asarray(grid, dtype=float)
    if np.any(v <= 0):
        raise ValueError("grid must lie strictly inside (0, inf)")
    if density is None:
        density = lambda u: stationary_density(u, params)
    a, w1, w2 = params.alpha, params.omega1, params.omega2
    rb, Mb = params.rho_bar, params.M_bar

    def advected(u):
        coeff = (
            (w1 * Mb - w2 * u * rb)
            + a * (w2 * Mb - w2 * u * rb)
            + (w1 * Mb - w1 * u * rb)
            + (w2 * Mb - w1 * u * rb)
        )
        return coeff * density(u)

    def diffused(u):
        return u * u * density(u)

    h = h_rel * v
    drift = -(beta12 / (1.0 + a)) * _stencil_d1(advected, v, h)
    diffusion = (
        params.zeta**2 * beta12 * rb * (3.0 + a) / (2.0 * (1.0 + a))
    ) * _stencil_d2(diffused, v, h)
    return drift, diffusion


def fp_stationarity_residual(params: ParetoParams, grid, beta12: float = 1.0, density=None) -> float:
    """Max-norm residual of the reduced Fokker-Planck operator on the grid."""
    drift, diffusion = fp_operator_terms(params, grid, beta12, density=density)
    return float(np.max(np.abs(drift + diffusion)))


def rescaled_post_state_sampler(base_sampler, eps: float):
    """Mixture-family rescaling of a post-state sampler.

    With probability 1 - eps the pre-state is kept, with probability eps the
    base sampler fires. eps = 1 is the base sampler itself; as eps -> 0 the
    sampled law collapses onto the pre-state point mass.
    """
    if not (0.0 < eps <= 1.0):
        raise ValueError(f"epsilon must lie in (0, 1], got {eps}")

    def sampler(v, w, x, y, rng, size):
        draws = np.asarray(base_sampler(v, w, x, y, rng, size), dtype=float)
        keep = rng.random(size) >= eps
        out = draws.copy()
        out[keep] = v
        return out

    return sampler
