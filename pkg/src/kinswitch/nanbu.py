"""Nanbu-Babovski Monte Carlo stepper for the simultaneous label-switch and
wealth-exchange process, plus empirical statistics extraction.

One step: shuffle the agent index array once and pair consecutive entries
(disjoint pairs; an odd trailing agent sits the step out). Each pair (i, j)
interacts with probability lambda_{x_i x_j} * dt; an interacting pair draws
its post-label pair from P_{x_i x_j}^{kl}(v_i, v_j) with a single inverse-CDF
categorical draw over the enumerated 4-plets, and its post-wealths from the
exchange rule with fresh independent noise. Everything is vectorized over
pairs, and a run is fully determined by its seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .fokker_planck import QuasiInvariantConfig, qinv_exchange_post_states
from .model import Agent, TradeModelSpec, TransferKernel, exchange_post_states

__all__ = [
    "Population",
    "StepConfig",
    "EmpiricalStats",
    "Trajectory",
    "ConstraintError",
    "step",
    "simulate",
    "empirical_stats",
    "default_wealth_grid",
    "sample_transfer",
]


class ConstraintError(RuntimeError):
    """A runtime constraint (e.g. the dt <= 1/max lambda bound) was violated."""


@dataclass
class Population:
    """Microscopic state of the whole system: one label and one wealth per agent."""

    labels: np.ndarray
    wealth: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        wealth = np.asarray(self.wealth, dtype=float)
        if labels.ndim != 1 or labels.shape != wealth.shape:
            raise ValueError("labels and wealth must be 1-D arrays of equal length")
        if labels.size < 2:
            raise ValueError("population needs at least two agents")
        if np.any(labels < 1):
            raise ValueError("labels are 1-based")
        if np.any(wealth < 0):
            raise ValueError("wealth must be non-negative")
        if self.time < 0:
            raise ValueError("time must be non-negative")
        self.labels = labels
        self.wealth = wealth

    @property
    def size(self) -> int:
        return self.labels.size

    @classmethod
    def from_agents(cls, agents, time: float = 0.0) -> "Population":
        agents = list(agents)
        return cls(
            np.asarray([a.label for a in agents], dtype=np.int64),
            np.asarray([a.wealth for a in agents], dtype=float),
            time,
        )

    def agents(self):
        return [Agent(int(l), float(v)) for l, v in zip(self.labels, self.wealth)]

    def counts(self, n_labels: int) -> np.ndarray:
        return np.bincount(self.labels, minlength=n_labels + 1)[1:]


@dataclass
class StepConfig:
    """Step size, seed, and the running count of negative-wealth clamps.

    The clamp counter only moves when the exchange rule was built with the
    positivity guard disabled (or under a quasi-invariant conservative rule,
    whose noise amplitude is not covered by the guard).
    """

    dt: float
    seed: int = 0
    clamp_counter: int = 0

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")


@dataclass(frozen=True)
class EmpiricalStats:
    """Per-label masses, first moments, means, and optional histograms.

    m is NaN for empty groups; histogram densities include mass beyond the
    grid in `overflow`, so density integral + overflow equals rho per label.
    """

    rho: np.ndarray
    M: np.ndarray
    m: np.ndarray
    counts: np.ndarray
    edges: Optional[np.ndarray] = None
    density: Optional[np.ndarray] = None
    overflow: Optional[np.ndarray] = None


@dataclass
class Trajectory:
    """Recorded (time, stats) pairs of one simulation run."""

    times: np.ndarray
    stats: list
    clamped: np.ndarray
    final_population: Population

    def column(self, name: str, label: int) -> np.ndarray:
        return np.asarray([getattr(s, name)[label - 1] for s in self.stats])


def default_wealth_grid(wealth: np.ndarray, bins: int = 200) -> np.ndarray:
    """Uniform histogram grid over [0, max(1, 3*mean + 10*std)]."""
    mean = float(wealth.mean())
    std = float(wealth.std())
    top = max(1.0, 3.0 * mean + 10.0 * std)
    return np.linspace(0.0, top, bins + 1)


def empirical_stats(
    pop: Population, n_labels: int, grid: Optional[np.ndarray] = None, histograms: bool = False
) -> EmpiricalStats:
    """Per-label masses, moments, means, and (optionally) binned densities.

    A provided grid must be strictly increasing and start at or below the
    observed minimum; samples beyond its right edge accumulate in the
    per-label overflow mass.
    """
    if pop.size == 0:
        raise ValueError("empty population")
    N = pop.size
    counts = pop.counts(n_labels)
    rho = counts / N
    M = np.zeros(n_labels)
    np.add.at(M, pop.labels - 1, pop.wealth)
    M /= N
    with np.errstate(invalid="ignore", divide="ignore"):
        m = np.where(counts > 0, M / np.maximum(rho, 1e-300), np.nan)
    edges = density = overflow = None
    if histograms:
        if grid is None:
            grid = default_wealth_grid(pop.wealth)
        edges = np.asarray(grid, dtype=float)
        if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
            raise ValueError("grid must be a strictly increasing 1-D array")
        if pop.wealth.min() < edges[0]:
            raise ValueError("grid does not cover the observed wealth range from below")
        widths = np.diff(edges)
        density = np.zeros((n_labels, widths.size))
        overflow = np.zeros(n_labels)
        for lab in range(1, n_labels + 1):
            w = pop.wealth[pop.labels == lab]
            if w.size == 0:
                continue
            inside = w <= edges[-1]
            hist, _ = np.histogram(w[inside], bins=edges)
            density[lab - 1] = hist / (N * widths)
            overflow[lab - 1] = np.count_nonzero(~inside) / N
    return EmpiricalStats(
        rho=rho, M=M, m=m, counts=counts, edges=edges, density=density, overflow=overflow
    )


def sample_transfer(kernel: TransferKernel, i: int, j: int, v: float, w: float, rng):
    """Draw one post-label pair (k, l) from P_ij^.. (v, w) by inverse CDF."""
    outcomes, probs = kernel.prob_table(i, j, float(v), float(w))
    idx = int(np.searchsorted(np.cumsum(probs), rng.random(), side="right"))
    idx = min(idx, len(outcomes) - 1)
    k, l = outcomes[idx]
    return int(k), int(l)


def _sample_transfers_vec(kernel, li, lj, vi, vj, rng):
    """Vectorized categorical transfer draw, grouped by pre-pair class."""
    ki = li.copy()
    kj = lj.copy()
    u = rng.random(li.size)
    # n is tiny, so masking once per (i, j) class is cheap
    for i in range(1, kernel.n + 1):
        for j in range(1, kernel.n + 1):
            mask = (li == i) & (lj == j)
            if not np.any(mask):
                continue
            outcomes, probs = kernel.prob_table(i, j, vi[mask], vj[mask])
            cdf = np.cumsum(probs, axis=-1)
            pick = np.sum(u[mask][:, None] > cdf, axis=-1)
            pick = np.minimum(pick, len(outcomes) - 1)
            ki[mask] = outcomes[pick, 0]
            kj[mask] = outcomes[pick, 1]
    return ki, kj


def step(
    pop: Population,
    spec: TradeModelSpec,
    cfg: StepConfig,
    rng: np.random.Generator,
    qinv: Optional[QuasiInvariantConfig] = None,
    wealth_update: Optional[Callable] = None,
) -> Population:
    """Advance the population by one Nanbu-Babovski step of length dt.

    `wealth_update(li, lj, vi, vj, rng) -> (vi', vj')`, when given, replaces
    the exchange-rule post-states for interacting pairs (used to drive the
    process directly by a transition-kernel sampler). Raises ConstraintError
    before touching anything if dt exceeds 1 / max lambda.
    """
    lam_max = spec.frequencies.lam_max
    if cfg.dt > 1.0 / lam_max:
        raise ConstraintError(
            f"dt = {cfg.dt} exceeds the interaction bound 1/max(lambda) = {1.0 / lam_max}"
        )
    N = pop.size
    perm = rng.permutation(N)
    if N % 2:
        perm = perm[:-1]
    ii = perm[0::2]
    jj = perm[1::2]
    li = pop.labels[ii]
    lj = pop.labels[jj]
    lam = spec.frequencies.of_pair(li, lj)
    hit = rng.random(ii.size) < lam * cfg.dt
    labels = pop.labels.copy()
    wealth = pop.wealth.copy()
    if np.any(hit):
        ih = ii[hit]
        jh = jj[hit]
        lih = li[hit]
        ljh = lj[hit]
        vih = pop.wealth[ih]
        vjh = pop.wealth[jh]
        ki, kj = _sample_transfers_vec(spec.transfers, lih, ljh, vih, vjh, rng)
        if wealth_update is not None:
            v2, w2 = wealth_update(lih, ljh, vih, vjh, rng)
        else:
            noise = spec.exchange.noise
            eta = noise.sample(rng, ih.size)
            eta_star = noise.sample(rng, ih.size)
            if qinv is None:
                v2, w2 = exchange_post_states(lih, ljh, vih, vjh, eta, eta_star, spec.exchange)
            else:
                v2, w2 = qinv_exchange_post_states(
                    lih, ljh, vih, vjh, eta, eta_star, spec.exchange, qinv
                )
        neg = v2 < 0
        neg_star = w2 < 0
        n_clamped = int(np.count_nonzero(neg)) + int(np.count_nonzero(neg_star))
        if n_clamped:
            v2 = np.where(neg, 0.0, v2)
            w2 = np.where(neg_star, 0.0, w2)
            cfg.clamp_counter += n_clamped
        labels[ih] = ki
        labels[jh] = kj
        wealth[ih] = v2
        wealth[jh] = w2
    return Population(labels, wealth, pop.time + cfg.dt)


def simulate(
    pop0: Population,
    spec: TradeModelSpec,
    cfg: StepConfig,
    t_end: float,
    record_every: int = 1,
    qinv: Optional[QuasiInvariantConfig] = None,
    wealth_update: Optional[Callable] = None,
    histograms: bool = False,
    histogram_every: int = 1,
    grid: Optional[np.ndarray] = None,
    rng: Optional[np.random.Generator] = None,
) -> Trajectory:
    """Run the stepper to t_end, recording stats every record_every steps.

    Deterministic given cfg.seed (unless an external rng is supplied);
    recorded timestamps are exact multiples of record_every * dt, plus the
    final time when t_end is not such a multiple. t_end = 0 records only the
    initial statistics. With histograms on, binned densities are attached to
    every histogram_every-th record (and always to the first and last).
    """
    if t_end < 0:
        raise ValueError("t_end must be >= 0")
    if record_every < 1 or int(record_every) != record_every:
        raise ValueError("record_every must be a positive integer (in steps)")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    n_labels = spec.n
    n_steps = int(round(t_end / cfg.dt))
    times = [pop0.time]
    stats = [empirical_stats(pop0, n_labels, grid=grid, histograms=histograms)]
    clamped = [cfg.clamp_counter]
    pop = pop0
    n_recorded = 1
    for k in range(1, n_steps + 1):
        pop = step(pop, spec, cfg, rng, qinv=qinv, wealth_update=wealth_update)
        if k % record_every == 0 or k == n_steps:
            with_hist = histograms and (
                n_recorded % histogram_every == 0 or k == n_steps
            )
            pop.time = pop0.time + k * cfg.dt
            times.append(pop.time)
            stats.append(empirical_stats(pop, n_labels, grid=grid, histograms=with_hist))
            clamped.append(cfg.clamp_counter)
            n_recorded += 1
    return Trajectory(
        times=np.asarray(times),
        stats=stats,
        clamped=np.asarray(clamped, dtype=np.int64),
        final_population=pop,
    )
