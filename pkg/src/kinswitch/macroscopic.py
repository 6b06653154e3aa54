"""Macroscopic tier: the two-group mass/moment ODEs, their closed-form
stationary state, and the general-n label-switch dynamics for constant rates.

The canonical state is (rho_1, rho_2, M_1, M_2); means m_i = M_i / rho_i are
derived quantities so nothing blows up while a group empties. Both the mass
and the moment components of the right-hand side sum to zero identically,
so rho_1 + rho_2 and M_1 + M_2 are conserved exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import RateTable

__all__ = [
    "MacroState",
    "StationarySummary",
    "DegenerateRatesError",
    "UndefinedMeanError",
    "trade_rhs",
    "mean_rhs",
    "integrate_rk4",
    "stationary_alpha",
    "stationary_summary",
    "label_switch_rhs",
]


class DegenerateRatesError(ValueError):
    """The stationary-mass formula needs beta_22^12 > 0."""


class UndefinedMeanError(ValueError):
    """A group mean was requested while that group's mass vanishes."""


@dataclass(frozen=True)
class MacroState:
    """Masses and first moments of the two groups."""

    rho: np.ndarray
    M: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=float)
        M = np.asarray(self.M, dtype=float)
        if rho.shape != (2,) or M.shape != (2,):
            raise ValueError("rho and M must be length-2 vectors")
        if np.any(rho < 0) or np.any(M < 0):
            raise ValueError("masses and moments must be non-negative")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "M", M)

    @classmethod
    def from_means(cls, rho, m) -> "MacroState":
        rho = np.asarray(rho, dtype=float)
        return cls(rho, rho * np.asarray(m, dtype=float))

    @property
    def rho_bar(self) -> float:
        return float(self.rho.sum())

    @property
    def M_bar(self) -> float:
        return float(self.M.sum())

    def means(self) -> np.ndarray:
        if np.any(self.rho == 0):
            raise UndefinedMeanError("mean undefined for a massless group")
        return self.M / self.rho

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.rho, self.M])


@dataclass(frozen=True)
class StationarySummary:
    """Closed-form equilibrium of the two-group trade ODEs."""

    alpha: float
    rho_inf: np.ndarray
    m_inf: float
    M_inf: np.ndarray
    switch_predicted: bool


def _trade_coeffs(rho1, rho2, rates: RateTable):
    # A multiplies what flows toward group 1, C what flows away from it
    A = rates.b12_11 * rho1 + rates.b22_12 * rho2
    C = rates.b11_12 * rho1 + rates.b12_22 * rho2
    return A, C


def trade_rhs(state: MacroState, rates: RateTable) -> np.ndarray:
    """Time derivative (drho_1, drho_2, dM_1, dM_2) of the two-group system.

    Components sum to zero exactly in both blocks, reflecting conservation
    of total mass and total wealth.
    """
    rates.check_trade_symmetry(atol=1e-12)
    r1, r2 = state.rho
    M1, M2 = state.M
    A, C = _trade_coeffs(r1, r2, rates)
    drho = A * r2 - C * r1
    dM = A * M2 - C * M1
    return np.array([drho, -drho, dM, -dM])


def mean_rhs(state: MacroState, rates: RateTable) -> np.ndarray:
    """Time derivative of the two group means; both masses must be positive.

    A pure relaxation of m_1 toward m_2 and vice versa, consistent with
    trade_rhs through the quotient rule m_i = M_i / rho_i.
    """
    r1, r2 = state.rho
    if r1 <= 0 or r2 <= 0:
        raise UndefinedMeanError("mean dynamics need rho_1, rho_2 > 0")
    m1, m2 = state.means()
    A, C = _trade_coeffs(r1, r2, rates)
    dm1 = (r2 / r1) * A * (m2 - m1)
    dm2 = (r1 / r2) * C * (m1 - m2)
    return np.array([dm1, dm2])


def _rhs_flat(y, b12_11, b22_12, b11_12, b12_22):
    r1, r2, M1, M2 = y
    A = b12_11 * r1 + b22_12 * r2
    C = b11_12 * r1 + b12_22 * r2
    drho = A * r2 - C * r1
    dM = A * M2 - C * M1
    return drho, -drho, dM, -dM


def integrate_rk4(
    state0: MacroState,
    rates: RateTable,
    dt: float = 1e-3,
    t_end: float = 50.0,
    record_every: int = 1,
):
    """Classical fixed-step RK4 on trade_rhs.

    Returns (times, states) with states of shape (T, 4) holding
    (rho_1, rho_2, M_1, M_2); row 0 is the initial state. Fixed step keeps
    runs bit-reproducible; recorded times are exact multiples of
    record_every * dt.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if record_every < 1:
        raise ValueError("record_every must be a positive integer")
    rates.check_trade_symmetry(atol=1e-12)
    b = (rates.b12_11, rates.b22_12, rates.b11_12, rates.b12_22)
    n_steps = int(round(t_end / dt))
    y = tuple(state0.as_vector())
    times = [0.0]
    states = [y]
    half = 0.5 * dt
    sixth = dt / 6.0
    for step in range(1, n_steps + 1):
        k1 = _rhs_flat(y, *b)
        y2 = tuple(y[i] + half * k1[i] for i in range(4))
        k2 = _rhs_flat(y2, *b)
        y3 = tuple(y[i] + half * k2[i] for i in range(4))
        k3 = _rhs_flat(y3, *b)
        y4 = tuple(y[i] + dt * k3[i] for i in range(4))
        k4 = _rhs_flat(y4, *b)
        y = tuple(
            y[i] + sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) for i in range(4)
        )
        if step % record_every == 0 or step == n_steps:
            times.append(step * dt)
            states.append(y)
    return np.asarray(times), np.asarray(states)


def stationary_alpha(rates: RateTable) -> float:
    """Equilibrium mass ratio alpha = rho_2_inf / rho_1_inf.

    Root of the quadratic balance of the mass equations:
    alpha = (-(b12_11 - b12_22) + sqrt((b12_11 - b12_22)^2 + 4 b11_12 b22_12))
            / (2 b22_12), always positive.
    """
    rates.check_trade_symmetry(atol=1e-12)
    if rates.b22_12 <= 0:
        raise DegenerateRatesError("beta_22^12 must be positive")
    d = rates.b12_11 - rates.b12_22
    return (-d + math.sqrt(d * d + 4.0 * rates.b11_12 * rates.b22_12)) / (2.0 * rates.b22_12)


def stationary_summary(rates: RateTable, state0: MacroState) -> StationarySummary:
    """Closed-form equilibrium reached from state0.

    rho_1_inf = rho_bar / (1 + alpha), rho_2_inf = alpha * rho_1_inf; both
    group means settle on the conserved m_inf = (rho_1 m_1 + rho_2 m_2) / rho_bar
    evaluated at t = 0, and M_i_inf = rho_i_inf * m_inf. A population-size
    switch is predicted iff (rho_2(0) - rho_1(0)) * (alpha - 1) < 0.
    """
    alpha = stationary_alpha(rates)
    rho_bar = state0.rho_bar
    if rho_bar <= 0:
        raise ValueError("total mass must be positive")
    rho1_inf = rho_bar / (1.0 + alpha)
    rho_inf = np.array([rho1_inf, alpha * rho1_inf])
    m_inf = state0.M_bar / rho_bar
    switch = (state0.rho[1] - state0.rho[0]) * (alpha - 1.0) < 0
    return StationarySummary(
        alpha=alpha,
        rho_inf=rho_inf,
        m_inf=m_inf,
        M_inf=rho_inf * m_inf,
        switch_predicted=bool(switch),
    )


def label_switch_rhs(f, rates: RateTable) -> np.ndarray:
    """General-n label-switch dynamics for constant rates.

    f_s' = sum_{j,k,l} (beta_jk^sl f_j f_k - beta_sk^jl f_s f_k); the result
    sums to zero. Wealth-dependent kernels have no closed macroscopic form
    and are handled by the Monte Carlo tier instead.
    """
    f = np.asarray(f, dtype=float)
    if f.shape != (rates.n,):
        raise ValueError(f"f must have shape ({rates.n},)")
    B = rates.beta_array
    gain = np.einsum("jksl,j,k->s", B, f, f)
    loss = f * np.einsum("skjl,k->s", B, f)
    return gain - loss
