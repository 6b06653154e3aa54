"""Experiment configuration: a flat TOML grammar with dotted sections.

A config file looks like

    mode = "compare"                  # mc | ode | compare | qinv

    [model]
    n = 2
    lambda = [[1.0, 1.0], [1.0, 10.0]]
    omega = [0.5, 0.5]
    zeta = 0.1
    noise = "uniform"                 # uniform | twopoint
    transfers = "trade"               # trade | exp_saturating | exp_decaying
    p12_11 = 0.5                      # trade: constant mixed-pair probabilities
    p12_22 = 0.5
    # c11 = 0.2 / c22 = 0.8           # exp_* kernels: coefficients of the wealth factor

    [initial]
    mass = [0.9, 0.1]
    dist = [["uniform", 0.0, 1.0], ["uniform", 5.0, 15.0]]   # or ["point", c]

    [run]
    N = 1000000
    dt = 0.01
    t_end = 20.0
    record_every = 10                 # in steps
    replicas = 1
    seed = 1234

    [qinv]                            # only read in qinv mode
    epsilon = 0.001
    variant = "nonconservative"
    # density_grid = [0.01, 50.0, 4000]   # analytic-density export grid (optional)

Values parse with TOML semantics; `serialize_config` emits the same grammar,
so parse -> serialize round-trips are idempotent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .fokker_planck import VARIANTS, QuasiInvariantConfig
from .model import (
    ExchangeRule,
    FrequencyMatrix,
    NoiseSpec,
    TradeModelSpec,
    TransferKernel,
)

__all__ = [
    "ConfigError",
    "ModelConfig",
    "InitialConfig",
    "RunConfig",
    "QinvConfig",
    "ExperimentConfig",
    "parse_config",
    "serialize_config",
    "apply_overrides",
]

MODES = ("mc", "ode", "compare", "qinv")
TRANSFER_KINDS = ("trade", "exp_saturating", "exp_decaying")


class ConfigError(ValueError):
    """Invalid configuration; `path` names the offending key."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


def _require(cond: bool, path: str, message: str):
    if not cond:
        raise ConfigError(path, message)


@dataclass
class ModelConfig:
    n: int = 2
    lam: list = field(default_factory=lambda: [[1.0, 1.0], [1.0, 10.0]])
    omega: list = field(default_factory=lambda: [0.5, 0.5])
    zeta: float = 0.1
    noise: str = "uniform"
    transfers: str = "trade"
    p12_11: float = 0.5
    p12_22: float = 0.5
    c11: float = 0.2
    c22: float = 0.8

    def kernel(self) -> TransferKernel:
        if self.transfers == "trade":
            return TransferKernel.trade(self.p12_11, self.p12_22)
        factor = (
            TransferKernel.exp_saturating_factor
            if self.transfers == "exp_saturating"
            else TransferKernel.exp_decaying_factor
        )
        return TransferKernel.trade_wealth_dependent(factor, self.c11, self.c22)

    def build(self) -> TradeModelSpec:
        try:
            freq = FrequencyMatrix(np.asarray(self.lam, dtype=float))
        except ValueError as e:
            raise ConfigError("model.lambda", str(e)) from e
        _require(self.n == 2, "model.n", "only the two-group trade model is configurable")
        _require(freq.n == self.n, "model.lambda", f"expected a {self.n}x{self.n} matrix")
        _require(self.noise in NoiseSpec.KINDS, "model.noise", f"expected one of {NoiseSpec.KINDS}")
        _require(
            self.transfers in TRANSFER_KINDS,
            "model.transfers",
            f"expected one of {TRANSFER_KINDS}",
        )
        try:
            kernel = self.kernel()
        except ValueError as e:
            raise ConfigError("model.p12_11/p12_22", str(e)) from e
        try:
            exchange = ExchangeRule(
                np.asarray(self.omega, dtype=float), self.zeta, NoiseSpec(self.noise)
            )
        except ValueError as e:
            raise ConfigError("model.omega/zeta", str(e)) from e
        _require(exchange.n == self.n, "model.omega", f"expected {self.n} entries")
        return TradeModelSpec(self.n, freq, kernel, exchange)


@dataclass
class InitialConfig:
    mass: list = field(default_factory=lambda: [0.9, 0.1])
    dist: list = field(default_factory=lambda: [["uniform", 0.0, 1.0], ["uniform", 5.0, 15.0]])

    def validate(self, n: int):
        _require(len(self.mass) == n, "initial.mass", f"expected {n} entries")
        _require(all(m >= 0 for m in self.mass), "initial.mass", "masses must be >= 0")
        _require(abs(sum(self.mass)) > 0, "initial.mass", "total mass must be positive")
        _require(len(self.dist) == n, "initial.dist", f"expected {n} entries")
        for k, d in enumerate(self.dist):
            path = f"initial.dist[{k}]"
            _require(isinstance(d, (list, tuple)) and len(d) >= 1, path, "expected a list")
            kind = d[0]
            if kind == "uniform":
                _require(len(d) == 3, path, 'expected ["uniform", a, b]')
                a, b = float(d[1]), float(d[2])
                _require(0 <= a < b, path, "need 0 <= a < b")
            elif kind == "point":
                _require(len(d) == 2, path, 'expected ["point", c]')
                _require(float(d[1]) >= 0, path, "need c >= 0")
            else:
                raise ConfigError(path, f"unknown distribution kind {kind!r}")

    def initial_macro(self):
        """Exact (rho(0), M(0)) implied by the masses and distribution means."""
        rho = np.asarray(self.mass, dtype=float)
        means = []
        for d in self.dist:
            if d[0] == "uniform":
                means.append(0.5 * (float(d[1]) + float(d[2])))
            else:
                means.append(float(d[1]))
        return rho, rho * np.asarray(means)


@dataclass
class RunConfig:
    N: int = 100_000
    dt: float = 0.01
    t_end: float = 10.0
    record_every: int = 10
    replicas: int = 1
    seed: int = 1234

    def validate(self):
        _require(self.N >= 2, "run.N", "need at least two agents")
        _require(self.dt > 0, "run.dt", "dt must be positive")
        _require(self.t_end >= 0, "run.t_end", "t_end must be >= 0")
        _require(
            self.record_every >= 1 and int(self.record_every) == self.record_every,
            "run.record_every",
            "must be a positive integer (in steps)",
        )
        _require(self.replicas >= 1, "run.replicas", "need at least one replica")


@dataclass
class QinvConfig:
    epsilon: float = 1e-3
    variant: str = "nonconservative"
    # [v_lo, v_hi, points] for analytic_density.csv; empty = quantile-based default
    density_grid: list = field(default_factory=list)

    def validate(self):
        _require(0 < self.epsilon <= 1, "qinv.epsilon", "epsilon must lie in (0, 1]")
        _require(self.variant in VARIANTS, "qinv.variant", f"expected one of {VARIANTS}")
        if self.density_grid:
            g = self.density_grid
            ok = len(g) == 3 and 0 < g[0] < g[1] and int(g[2]) >= 2
            _require(ok, "qinv.density_grid", "expected [v_lo, v_hi, points] with 0 < lo < hi")

    def build(self) -> QuasiInvariantConfig:
        return QuasiInvariantConfig(self.epsilon, self.variant)


@dataclass
class ExperimentConfig:
    mode: str = "mc"
    model: ModelConfig = field(default_factory=ModelConfig)
    initial: InitialConfig = field(default_factory=InitialConfig)
    run: RunConfig = field(default_factory=RunConfig)
    qinv: QinvConfig = field(default_factory=QinvConfig)

    def validate(self) -> "ExperimentConfig":
        _require(self.mode in MODES, "mode", f"expected one of {MODES}")
        spec = self.model.build()
        self.initial.validate(self.model.n)
        self.run.validate()
        if self.mode == "qinv":
            self.qinv.validate()
        if self.mode in ("ode", "compare"):
            _require(
                not spec.transfers.wealth_dependent,
                "model.transfers",
                f"mode={self.mode} needs a constant transfer kernel "
                "(wealth-dependent kernels have no macroscopic ODE form)",
            )
        return self

    def build_model(self) -> TradeModelSpec:
        return self.model.build()

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "model": {
                "n": self.model.n,
                "lambda": self.model.lam,
                "omega": self.model.omega,
                "zeta": self.model.zeta,
                "noise": self.model.noise,
                "transfers": self.model.transfers,
                "p12_11": self.model.p12_11,
                "p12_22": self.model.p12_22,
                "c11": self.model.c11,
                "c22": self.model.c22,
            },
            "initial": {"mass": self.initial.mass, "dist": self.initial.dist},
            "run": {
                "N": self.run.N,
                "dt": self.run.dt,
                "t_end": self.run.t_end,
                "record_every": self.run.record_every,
                "replicas": self.run.replicas,
                "seed": self.run.seed,
            },
            "qinv": {
                "epsilon": self.qinv.epsilon,
                "variant": self.qinv.variant,
                "density_grid": self.qinv.density_grid,
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        cfg = cls()
        known = {"mode", "model", "initial", "run", "qinv"}
        for key in data:
            _require(key in known, key, f"unknown section or key (expected {sorted(known)})")
        cfg.mode = data.get("mode", cfg.mode)
        model = data.get("model", {})
        mfields = {
            "n": int,
            "lambda": list,
            "omega": list,
            "zeta": float,
            "noise": str,
            "transfers": str,
            "p12_11": float,
            "p12_22": float,
            "c11": float,
            "c22": float,
        }
        for key in model:
            _require(key in mfields, f"model.{key}", "unknown key")
        if "n" in model:
            cfg.model.n = int(model["n"])
        if "lambda" in model:
            cfg.model.lam = model["lambda"]
        if "omega" in model:
            cfg.model.omega = [float(x) for x in model["omega"]]
        for key in ("zeta", "p12_11", "p12_22", "c11", "c22"):
            if key in model:
                setattr(cfg.model, key, float(model[key]))
        for key in ("noise", "transfers"):
            if key in model:
                setattr(cfg.model, key, str(model[key]))
        initial = data.get("initial", {})
        for key in initial:
            _require(key in ("mass", "dist"), f"initial.{key}", "unknown key")
        if "mass" in initial:
            cfg.initial.mass = [float(x) for x in initial["mass"]]
        if "dist" in initial:
            cfg.initial.dist = [list(d) for d in initial["dist"]]
        run = data.get("run", {})
        rfields = ("N", "dt", "t_end", "record_every", "replicas", "seed")
        for key in run:
            _require(key in rfields, f"run.{key}", "unknown key")
        for key, cast in (
            ("N", int),
            ("dt", float),
            ("t_end", float),
            ("record_every", int),
            ("replicas", int),
            ("seed", int),
        ):
            if key in run:
                setattr(cfg.run, key, cast(run[key]))
        qinv = data.get("qinv", {})
        for key in qinv:
            _require(
                key in ("epsilon", "variant", "density_grid"), f"qinv.{key}", "unknown key"
            )
        if "epsilon" in qinv:
            cfg.qinv.epsilon = float(qinv["epsilon"])
        if "variant" in qinv:
            cfg.qinv.variant = str(qinv["variant"])
        if "density_grid" in qinv:
            cfg.qinv.density_grid = list(qinv["density_grid"])
        return cfg


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a TOML config; raises ConfigError with a key path."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError("<toml>", str(e)) from e
    return ExperimentConfig.from_dict(data).validate()


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {type(value)!r}")


def serialize_config(cfg: ExperimentConfig) -> str:
    """Emit the config in the grammar parse_config reads (round-trip stable)."""
    data = cfg.to_dict()
    lines = [f"mode = {_toml_value(data['mode'])}"]
    for section in ("model", "initial", "run", "qinv"):
        lines.append("")
        lines.append(f"[{section}]")
        for key, value in data[section].items():
            lines.append(f"{key} = {_toml_value(value)}")
    return "\n".join(lines) + "\n"


def apply_overrides(cfg: ExperimentConfig, overrides) -> ExperimentConfig:
    """Apply `section.key=value` strings on top of a config and revalidate.

    Values are parsed with TOML semantics, so lists and floats work:
    run.seed=7, model.zeta=0.2, model.lambda=[[1,1],[1,10]].
    """
    data = cfg.to_dict()
    for item in overrides:
        if "=" not in item:
            raise ConfigError(item, "override must look like section.key=value")
        key, raw = item.split("=", 1)
        key = key.strip()
        try:
            value = tomllib.loads(f"v = {raw.strip()}")["v"]
        except tomllib.TOMLDecodeError:
            value = raw.strip()
        parts = key.split(".")
        node = data
        for part in parts[:-1]:
            if part not in node or not isinstance(node[part], dict):
                raise ConfigError(key, "unknown section")
            node = node[part]
        if parts[-1] not in node:
            raise ConfigError(key, "unknown key")
        node[parts[-1]] = value
    return ExperimentConfig.from_dict(data).validate()
