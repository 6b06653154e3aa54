"""Model vocabulary: labels, agents, interaction frequencies, transfer kernels,
exchange rules, and their probabilistic contracts.

Labels are 1-based integers in {1, ..., n}. A transfer kernel assigns, to each
pre-interaction label pair (i, j), a probability table over post-interaction
pairs (k, l); entries may be constants or functions of the two wealths (v, w),
in which case any residual mass is carried by the stay event (k, l) = (i, j).
The wealth exchange is the affine rule with multiplicative noise

    v' = (1 - omega_x) v + omega_y w + zeta_xy v eta,
    w' = (1 - omega_y) w + omega_x v + zeta_xy w eta*,

with eta, eta* independent, zero-mean, unit-variance, bounded. Under the
constructor guard zeta_xy * support_bound <= 1 - omega_x (all ordered pairs)
post-interaction wealths are provably non-negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Agent",
    "NoiseSpec",
    "FrequencyMatrix",
    "TransferKernel",
    "InvalidKernelError",
    "KernelReport",
    "validate_transfer_kernel",
    "default_probe_points",
    "ExchangeRule",
    "RateTable",
    "TradeModelSpec",
    "exchange_post_states",
    "transition_moments",
    "binary_rule_moments",
    "InconsistentKernelError",
]

SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class Agent:
    """One individual's microscopic state: subgroup label and non-negative wealth."""

    label: int
    wealth: float

    def __post_init__(self):
        if self.label < 1:
            raise ValueError(f"label must be >= 1, got {self.label}")
        if self.wealth < 0:
            raise ValueError(f"wealth must be >= 0, got {self.wealth}")


class NoiseSpec:
    """Bounded symmetric noise law with zero mean and unit variance.

    Kinds:
      uniform  -- Uniform(-sqrt(3), sqrt(3)), support bound sqrt(3) (default)
      twopoint -- +1/-1 with equal probability, support bound 1
    """

    KINDS = ("uniform", "twopoint")

    def __init__(self, kind: str = "uniform"):
        if kind not in self.KINDS:
            raise ValueError(f"unknown noise kind {kind!r}; expected one of {self.KINDS}")
        self.kind = kind
        self.support_bound = SQRT3 if kind == "uniform" else 1.0

    def sample(self, rng: np.random.Generator, size=None):
        if self.kind == "uniform":
            return rng.uniform(-SQRT3, SQRT3, size)
        return rng.integers(0, 2, size) * 2.0 - 1.0

    def __repr__(self):
        return f"NoiseSpec({self.kind!r})"

    def __eq__(self, other):
        return isinstance(other, NoiseSpec) and other.kind == self.kind


@dataclass(frozen=True)
class FrequencyMatrix:
    """Symmetric matrix of pairwise interaction frequencies lambda_ij > 0."""

    lam: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=float)
        if lam.ndim != 2 or lam.shape[0] != lam.shape[1]:
            raise ValueError("lambda must be a square matrix")
        if not np.allclose(lam, lam.T, rtol=0, atol=0):
            raise ValueError("lambda must be symmetric")
        if not np.all(np.isfinite(lam)) or np.any(lam <= 0):
            raise ValueError("lambda entries must be positive and finite")
        object.__setattr__(self, "lam", lam)

    @property
    def n(self) -> int:
        return self.lam.shape[0]

    @property
    def lam_max(self) -> float:
        return float(self.lam.max())

    def of_pair(self, x, y):
        """lambda for 1-based label arrays/scalars x, y."""
        return self.lam[np.asarray(x) - 1, np.asarray(y) - 1]

    @classmethod
    def constant(cls, n: int, value: float = 1.0) -> "FrequencyMatrix":
        return cls(np.full((n, n), float(value)))


class InvalidKernelError(ValueError):
    """A transfer probability is negative or exceeds 1 at some evaluation point."""


ProbEntry = "float | Callable[[np.ndarray, np.ndarray], np.ndarray]"


class TransferKernel:
    """Post-label distribution P_ij^kl(v, w) for every pre-interaction pair (i, j).

    Entries are given per pre-pair as {(k, l): prob} where prob is a float or
    a callable of the two wealth arrays. For each pre-pair the residual mass
    1 - sum(entries) goes to the stay event (k, l) = (i, j); pre-pairs with no
    entries are pure stay events. Constant kernels expose a dense probability
    array for the ODE tier.
    """

    def __init__(self, n: int, entries: dict[tuple[int, int], dict[tuple[int, int], "ProbEntry"]]):
        if n < 1:
            raise ValueError("n must be >= 1")
        self.n = n
        self._tables: dict[tuple[int, int], tuple[np.ndarray, list]] = {}
        for (i, j), table in entries.items():
            self._check_labels(i, j)
            outcomes = []
            probs = []
            stay_listed = False
            for (k, l), p in table.items():
                self._check_labels(k, l)
                if (k, l) == (i, j):
                    stay_listed = True
                outcomes.append((k, l))
                probs.append(p)
            if not stay_listed:
                outcomes.append((i, j))
                probs.append(None)  # residual mass, filled at evaluation
            self._tables[(i, j)] = (np.asarray(outcomes, dtype=np.int64), probs)
        # constant pre-pairs get validated eagerly so bad tables fail fast
        for (i, j) in self._tables:
            if not self.is_wealth_dependent(i, j):
                self.prob_table(i, j, 0.0, 0.0)

    def _check_labels(self, *labels: int):
        for a in labels:
            if not (1 <= a <= self.n):
                raise ValueError(f"label {a} outside 1..{self.n}")

    @classmethod
    def identity(cls, n: int) -> "TransferKernel":
        """No-switch kernel: P_ij^ij = 1 for every pre-pair."""
        return cls(n, {})

    @classmethod
    def trade(cls, p12_11: float, p12_22: float) -> "TransferKernel":
        """Two-group trade kernel on the standard transfer 4-plets.

        Same-label pairs always split one partner off (P_ii^12 = P_ii^21 = 0.5);
        mixed pairs merge into group 1 with probability p12_11 and into group 2
        with probability p12_22 (any remainder stays mixed).
        """
        return cls(
            2,
            {
                (1, 1): {(1, 2): 0.5, (2, 1): 0.5},
                (2, 2): {(1, 2): 0.5, (2, 1): 0.5},
                (1, 2): {(1, 1): p12_11, (2, 2): p12_22},
                (2, 1): {(1, 1): p12_11, (2, 2): p12_22},
            },
        )

    @classmethod
    def trade_wealth_dependent(
        cls, factor: Callable[[np.ndarray, np.ndarray], np.ndarray], c11: float, c22: float
    ) -> "TransferKernel":
        """Trade kernel whose mixed-pair probabilities scale with a wealth factor.

        P_12^11(v,w) = c11 * factor(v,w) and P_12^22(v,w) = c22 * factor(v,w);
        the wealth-independent remainder stays on the mixed pair. Same-label
        pairs keep the constant 0.5/0.5 split.
        """
        p11 = lambda v, w: c11 * factor(v, w)
        p22 = lambda v, w: c22 * factor(v, w)
        return cls(
            2,
            {
                (1, 1): {(1, 2): 0.5, (2, 1): 0.5},
                (2, 2): {(1, 2): 0.5, (2, 1): 0.5},
                (1, 2): {(1, 1): p11, (2, 2): p22},
                (2, 1): {(1, 1): p11, (2, 2): p22},
            },
        )

    @staticmethod
    def exp_saturating_factor(v, w):
        """(1/2)[(1 - e^-v) + (1 - e^-w)]: switching grows with wealth."""
        return 0.5 * ((1.0 - np.exp(-np.asarray(v))) + (1.0 - np.exp(-np.asarray(w))))

    @staticmethod
    def exp_decaying_factor(v, w):
        """(1/2)[e^-v + e^-w]: switching fades with wealth."""
        return 0.5 * (np.exp(-np.asarray(v)) + np.exp(-np.asarray(w)))

    def pre_pairs(self):
        return sorted(self._tables.keys())

    def is_wealth_dependent(self, i: int, j: int) -> bool:
        table = self._tables.get((i, j))
        if table is None:
            return False
        return any(callable(p) for p in table[1])

    @property
    def wealth_dependent(self) -> bool:
        return any(self.is_wealth_dependent(i, j) for (i, j) in self._tables)

    def prob_table(self, i: int, j: int, v, w):
        """Outcomes and probabilities for pre-pair (i, j) at wealths (v, w).

        Returns (outcomes, probs): outcomes is a (K, 2) int array of (k, l)
        pairs and probs a (..., K) array broadcast over v, w; the rows sum to
        1 by construction. Raises InvalidKernelError on entries outside [0, 1].
        """
        v = np.asarray(v, dtype=float)
        w = np.asarray(w, dtype=float)
        table = self._tables.get((i, j))
        if table is None:
            return np.asarray([(i, j)], dtype=np.int64), np.ones(v.shape + (1,))
        outcomes, raw = table
        cols = []
        residual = np.ones_like(v)
        for (k, l), p in zip(outcomes, raw):
            if p is None:
                cols.append(None)
                continue
            val = np.broadcast_to(np.asarray(p(v, w) if callable(p) else p, dtype=float), v.shape)
            bad = (val < 0) | (val > 1)
            if np.any(bad):
                at = np.argwhere(bad)
                loc = tuple(at[0]) if at.size else ()
                vb = v[loc] if v.shape else float(v)
                wb = w[loc] if w.shape else float(w)
                raise InvalidKernelError(
                    f"P_{i}{j}^{int(k)}{int(l)}({vb}, {wb}) = {val[loc] if val.shape else float(val)}"
                    " outside [0, 1]"
                )
            residual = residual - val
            cols.append(val)
        if np.any(residual < -1e-12):
            at = np.argwhere(residual < -1e-12)
            loc = tuple(at[0]) if at.size else ()
            raise InvalidKernelError(
                f"P_{i}{j} table sums to more than 1 at (v, w) = "
                f"({v[loc] if v.shape else float(v)}, {w[loc] if w.shape else float(w)})"
            )
        residual = np.clip(residual, 0.0, 1.0)
        cols = [residual if c is None else c for c in cols]
        return outcomes, np.stack(cols, axis=-1)

    def constant_prob(self, i: int, j: int, k: int, l: int) -> float:
        """P_ij^kl for a constant pre-pair (errors on wealth-dependent ones)."""
        if self.is_wealth_dependent(i, j):
            raise ValueError(f"pre-pair ({i}, {j}) is wealth-dependent")
        outcomes, probs = self.prob_table(i, j, 0.0, 0.0)
        match = (outcomes[:, 0] == k) & (outcomes[:, 1] == l)
        return float(probs[match].sum())

    def dense(self) -> np.ndarray:
        """Dense (n, n, n, n) array P[i-1, j-1, k-1, l-1] for constant kernels."""
        if self.wealth_dependent:
            raise ValueError("kernel is wealth-dependent; no constant dense form")
        n = self.n
        P = np.zeros((n, n, n, n))
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                outcomes, probs = self.prob_table(i, j, 0.0, 0.0)
                for (k, l), p in zip(outcomes, probs):
                    P[i - 1, j - 1, k - 1, l - 1] += p
        return P


@dataclass(frozen=True)
class KernelReport:
    """Normalization audit of a transfer kernel over a set of probe points."""

    max_deviation: float
    per_pair: dict
    passed: bool
    tolerance: float = 1e-12


def default_probe_points(per_decade: int = 3) -> list[tuple[float, float]]:
    """Log-spaced wealth grid over [1e-3, 1e3] crossed with itself."""
    g = np.logspace(-3, 3, 6 * per_decade + 1)
    return [(float(a), float(b)) for a in g for b in g]


def validate_transfer_kernel(kernel: TransferKernel, probe_points=None) -> KernelReport:
    """Check sum_kl P_ij^kl(v, w) = 1 at every probe point for every pre-pair.

    Negative entries raise InvalidKernelError (naming the offending entry);
    the report carries the max |sum - 1| per pre-pair and passes iff the
    overall max deviation is <= 1e-12.
    """
    if probe_points is None:
        probe_points = default_probe_points()
    probe_points = list(probe_points)
    if not probe_points:
        raise ValueError("probe_points must be non-empty")
    for (v, w) in probe_points:
        if v < 0 or w < 0:
            raise ValueError("probe wealths must be non-negative")
    vv = np.asarray([p[0] for p in probe_points])
    ww = np.asarray([p[1] for p in probe_points])
    per_pair = {}
    pairs = kernel.pre_pairs() or [(i, j) for i in range(1, kernel.n + 1) for j in range(1, kernel.n + 1)]
    for (i, j) in pairs:
        _, probs = kernel.prob_table(i, j, vv, ww)
        per_pair[(i, j)] = float(np.max(np.abs(probs.sum(axis=-1) - 1.0)))
    max_dev = max(per_pair.values())
    return KernelReport(max_deviation=max_dev, per_pair=per_pair, passed=max_dev <= 1e-12)


@dataclass(frozen=True)
class ExchangeRule:
    """Per-label trading propensities, per-pair fluctuation strengths, noise law.

    The constructor enforces zeta_xy * support_bound <= 1 - omega_x for every
    ordered pair, which makes post-interaction wealths non-negative for all
    admissible noise draws. Pass enforce_positivity=False to skip the guard
    (the Monte Carlo stepper then clamps negative wealths to zero and counts
    the clamps).
    """

    omega: np.ndarray
    zeta: np.ndarray
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    enforce_positivity: bool = True

    def __post_init__(self):
        omega = np.atleast_1d(np.asarray(self.omega, dtype=float))
        n = omega.size
        zeta = np.asarray(self.zeta, dtype=float)
        if zeta.ndim == 0:
            zeta = np.full((n, n), float(zeta))
        if zeta.shape != (n, n):
            raise ValueError(f"zeta must be scalar or ({n}, {n}) matrix")
        if not np.allclose(zeta, zeta.T, rtol=0, atol=0):
            raise ValueError("zeta must be symmetric")
        if np.any((omega < 0) | (omega > 1)):
            raise ValueError("omega entries must lie in [0, 1]")
        if np.any(zeta < 0):
            raise ValueError("zeta entries must be >= 0")
        if self.enforce_positivity:
            bound = self.noise.support_bound
            slack = (1.0 - omega)[:, None] - zeta * bound
            if np.any(slack < -1e-15):
                x, y = np.argwhere(slack < -1e-15)[0]
                raise ValueError(
                    f"positivity guard violated for pair ({x + 1}, {y + 1}): "
                    f"zeta*bound = {zeta[x, y] * bound:.6g} > 1 - omega_{x + 1} = {1 - omega[x]:.6g}"
                )
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "zeta", zeta)

    @property
    def n(self) -> int:
        return self.omega.size

    def drift(self, x, y, v, w):
        """Deterministic post-state I_xy(v, w) = (1 - omega_x) v + omega_y w."""
        x = np.asarray(x) - 1
        y = np.asarray(y) - 1
        return (1.0 - self.omega[x]) * np.asarray(v) + self.omega[y] * np.asarray(w)

    def spread(self, x, y, v):
        """Fluctuation amplitude D_xy(v) = zeta_xy * v of the updating agent."""
        return self.zeta[np.asarray(x) - 1, np.asarray(y) - 1] * np.asarray(v)


def exchange_post_states(x, y, v, w, eta, eta_star, rule: ExchangeRule):
    """Post-interaction wealths of the affine exchange rule.

    Works elementwise on arrays; labels are 1-based. With eta = eta* = 0 the
    pair sum v' + w' equals v + w exactly.
    """
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    v2 = rule.drift(x, y, v, w) + rule.spread(x, y, v) * np.asarray(eta)
    w2 = rule.drift(y, x, w, v) + rule.spread(x, y, w) * np.asarray(eta_star)
    return v2, w2


class RateTable:
    """Transfer rates beta_ij^kl = lambda_ij * P_ij^kl for constant kernels."""

    def __init__(self, beta: np.ndarray):
        beta = np.asarray(beta, dtype=float)
        if beta.ndim != 4 or len(set(beta.shape)) != 1:
            raise ValueError("beta must be an (n, n, n, n) array")
        if np.any(beta < 0):
            raise ValueError("rates must be >= 0")
        self.beta_array = beta
        self.n = beta.shape[0]

    @classmethod
    def from_model(cls, freq: FrequencyMatrix, kernel: TransferKernel) -> "RateTable":
        if freq.n != kernel.n:
            raise ValueError("frequency matrix and kernel disagree on n")
        return cls(freq.lam[:, :, None, None] * kernel.dense())

    def beta(self, i: int, j: int, k: int, l: int) -> float:
        """beta_ij^kl with 1-based labels."""
        return float(self.beta_array[i - 1, j - 1, k - 1, l - 1])

    # the four rates steering the two-group trade ODEs
    @property
    def b11_12(self) -> float:
        return self.beta(1, 1, 1, 2)

    @property
    def b22_12(self) -> float:
        return self.beta(2, 2, 1, 2)

    @property
    def b12_11(self) -> float:
        return self.beta(1, 2, 1, 1)

    @property
    def b12_22(self) -> float:
        return self.beta(1, 2, 2, 2)

    def check_trade_symmetry(self, atol: float = 0.0):
        """Enforce beta_ii^12 = beta_ii^21 and beta_12^ii = beta_21^ii (n = 2)."""
        if self.n != 2:
            raise ValueError("trade symmetry is defined for n = 2")
        pairs = [
            ((1, 1, 1, 2), (1, 1, 2, 1)),
            ((2, 2, 1, 2), (2, 2, 2, 1)),
            ((1, 2, 1, 1), (2, 1, 1, 1)),
            ((1, 2, 2, 2), (2, 1, 2, 2)),
        ]
        for a, b in pairs:
            if abs(self.beta(*a) - self.beta(*b)) > atol:
                raise ValueError(f"trade symmetry violated: beta{a} != beta{b}")


@dataclass(frozen=True)
class TradeModelSpec:
    """Complete model: label count, frequencies, transfer kernel, exchange rule."""

    n: int
    frequencies: FrequencyMatrix
    transfers: TransferKernel
    exchange: ExchangeRule

    def __post_init__(self):
        if not (self.n == self.frequencies.n == self.transfers.n == self.exchange.n):
            raise ValueError(
                f"inconsistent label counts: n={self.n}, lambda={self.frequencies.n}, "
                f"kernel={self.transfers.n}, exchange={self.exchange.n}"
            )

    def rate_table(self) -> RateTable:
        return RateTable.from_model(self.frequencies, self.transfers)


class InconsistentKernelError(ValueError):
    """Sampled second moment fell below the squared mean beyond tolerance."""


def transition_moments(sampler, x, y, v, w, rng, sample_count: int = 100_000):
    """Monte Carlo mean, second moment, and spread of a post-state sampler.

    `sampler(v, w, x, y, rng, size)` must return draws of the post-state of
    the agent currently at (x, v) meeting a partner at (y, w). Returns
    (V_T, E_T, D_T) with D_T = sqrt(E_T - V_T^2).
    """
    if sample_count < 10_000:
        raise ValueError("sample_count must be >= 10^4 for a usable estimate")
    draws = np.asarray(sampler(v, w, x, y, rng, sample_count), dtype=float)
    V = float(draws.mean())
    E = float((draws**2).mean())
    var = E - V * V
    if var < -1e-9 * max(1.0, E):
        raise InconsistentKernelError(f"negative variance estimate {var!r}")
    return V, E, math.sqrt(max(var, 0.0))


def binary_rule_moments(rule: ExchangeRule, x: int, y: int, v: float, w: float):
    """Exact (V_T, E_T, D_T) of the delta-family kernel built on the exchange rule.

    For T(v'|v,w) concentrated on I + D*eta with unit-variance noise the mean
    is I, the energy I^2 + D^2, and the spread D.
    """
    I = float(rule.drift(x, y, v, w))
    D = float(rule.spread(x, y, v))
    return I, I * I + D * D, abs(D)
