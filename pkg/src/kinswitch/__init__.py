"""Kinetic toolkit for multi-agent systems whose members swap subgroup labels
and exchange wealth within the same binary interaction.

Three tiers of description cross-validate each other: a Nanbu-Babovski
Monte Carlo simulation of the microscopic process (`nanbu`), the derived
macroscopic mass/moment ODEs with closed-form stationary states
(`macroscopic`), and the quasi-invariant Fokker-Planck steady state with its
Pareto index (`fokker_planck`). Distribution agreement is measured with the
1-Wasserstein distance (`metrics`); `runner`/`cli` drive reproducible,
config-described experiments.
"""

from .fokker_planck import (
    ParetoParams,
    QuasiInvariantConfig,
    gamma_exponent,
    qinv_exchange_post_states,
    stationary_density,
)
from .macroscopic import (
    MacroState,
    StationarySummary,
    integrate_rk4,
    label_switch_rhs,
    mean_rhs,
    stationary_alpha,
    stationary_summary,
    trade_rhs,
)
from .metrics import WeightedSample, density_vs_samples_w1, wasserstein1
from .model import (
    Agent,
    ExchangeRule,
    FrequencyMatrix,
    NoiseSpec,
    RateTable,
    TradeModelSpec,
    TransferKernel,
    exchange_post_states,
    validate_transfer_kernel,
)
from .nanbu import (
    EmpiricalStats,
    Population,
    StepConfig,
    empirical_stats,
    sample_transfer,
    simulate,
    step,
)

__version__ = "0.1.0"

__all__ = [
    "Agent",
    "EmpiricalStats",
    "ExchangeRule",
    "FrequencyMatrix",
    "MacroState",
    "NoiseSpec",
    "ParetoParams",
    "Population",
    "QuasiInvariantConfig",
    "RateTable",
    "StationarySummary",
    "StepConfig",
    "TradeModelSpec",
    "TransferKernel",
    "WeightedSample",
    "density_vs_samples_w1",
    "empirical_stats",
    "exchange_post_states",
    "gamma_exponent",
    "integrate_rk4",
    "label_switch_rhs",
    "mean_rhs",
    "qinv_exchange_post_states",
    "sample_transfer",
    "simulate",
    "stationary_alpha",
    "stationary_density",
    "stationary_summary",
    "step",
    "trade_rhs",
    "validate_transfer_kernel",
    "wasserstein1",
]
