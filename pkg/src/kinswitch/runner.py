"""Config-driven experiment runner: builds the model, dispatches the Monte
Carlo / ODE tiers, and writes one self-describing output bundle per run.

Bundle layout (per run directory):

    config.resolved       exact TOML the run used (re-runnable as-is)
    trajectory.csv        t, rho_1..n, M_1..n, m_1..n, clamped  (replica mean)
    trajectory_ode.csv    same schema from the ODE tier (ode/compare modes)
    diffs.csv             per-timestamp |MC - ODE| columns (compare mode)
    histograms.csv        t, label, bin_left, bin_right, density snapshots
    analytic_density.csv  v, density of the steady profile (qinv mode)
    summary.json          resolved config, seed, and mode-specific results
    plot_run.py           standalone copy of the plotting script
    *.png                 rendered figures (unless plots are disabled)

Replica-mean curves are written to trajectory.csv; histograms pool the final
populations of all replicas. All W1 numbers compare unit-mass normalizations
(empirical masses differ from their targets by O(N^-1/2), far above the W1
equal-mass gate), with the mass gaps reported alongside.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from . import plots
from .config import ExperimentConfig, InitialConfig, serialize_config
from .fokker_planck import ParetoParams, gamma_exponent, stationary_density
from .macroscopic import MacroState, integrate_rk4, stationary_summary
from .metrics import WeightedSample, wasserstein1, density_to_weighted_sample
from .nanbu import Population, StepConfig, empirical_stats, simulate

__all__ = [
    "initial_population",
    "run_replicas",
    "replica_mean",
    "run_experiment",
    "write_trajectory_csv",
    "write_histograms_csv",
]


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    return repr(x)


def initial_population(initial: InitialConfig, N: int, rng) -> Population:
    """Sample N agents with exact per-label counts and per-label wealth laws.

    Label counts are deterministic (largest-remainder rounding of the target
    masses), so rho_i(0) is reproduced exactly; wealths are drawn from each
    label's configured distribution.
    """
    masses = np.asarray(initial.mass, dtype=float)
    weights = masses / masses.sum()
    counts = np.floor(weights * N).astype(int)
    short = N - counts.sum()
    if short > 0:
        order = np.argsort(-(weights * N - counts))
        counts[order[:short]] += 1
    labels = np.repeat(np.arange(1, weights.size + 1), counts)
    wealth = np.empty(N)
    start = 0
    for k, d in enumerate(initial.dist):
        stop = start + counts[k]
        if d[0] == "uniform":
            wealth[start:stop] = rng.uniform(float(d[1]), float(d[2]), counts[k])
        else:
            wealth[start:stop] = float(d[1])
        start = stop
    return Population(labels, wealth)


def run_replicas(config: ExperimentConfig, spec, qinv=None, histogram_every=None):
    """Run config.run.replicas independent replicas on spawned seed streams.

    Returns (trajectories, step_configs); replica k is reproducible on its
    own from SeedSequence(seed).spawn()[k]. Replica 0 carries histogram
    snapshots every histogram_every records when requested.
    """
    run = config.run
    seeds = np.random.SeedSequence(run.seed).spawn(run.replicas)
    trajectories = []
    cfgs = []
    for k, child in enumerate(seeds):
        rng = np.random.default_rng(child)
        pop0 = initial_population(config.initial, run.N, rng)
        cfg = StepConfig(dt=run.dt, seed=run.seed)
        traj = simulate(
            pop0,
            spec,
            cfg,
            t_end=run.t_end,
            record_every=run.record_every,
            qinv=qinv,
            histograms=k == 0 and histogram_every is not None,
            histogram_every=histogram_every or 1,
            rng=rng,
        )
        trajectories.append(traj)
        cfgs.append(cfg)
    return trajectories, cfgs


def replica_mean(trajectories):
    """Average rho/M/m trajectories across replicas; clamp counts are summed."""
    times = trajectories[0].times
    rho = np.mean([[s.rho for s in t.stats] for t in trajectories], axis=0)
    M = np.mean([[s.M for s in t.stats] for t in trajectories], axis=0)
    m = np.mean([[s.m for s in t.stats] for t in trajectories], axis=0)
    clamped = np.sum([t.clamped for t in trajectories], axis=0)
    return times, rho, M, m, clamped


def write_trajectory_csv(path, times, rho, M, m, clamped):
    n = rho.shape[1]
    header = (
        ["t"]
        + [f"rho_{k}" for k in range(1, n + 1)]
        + [f"M_{k}" for k in range(1, n + 1)]
        + [f"m_{k}" for k in range(1, n + 1)]
        + ["clamped"]
    )
    lines = [",".join(header)]
    for i, t in enumerate(times):
        row = [_fmt(t)]
        row += [_fmt(x) for x in rho[i]]
        row += [_fmt(x) for x in M[i]]
        row += [_fmt(x) for x in m[i]]
        row.append(str(int(clamped[i])))
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")


def write_histograms_csv(path, snapshots):
    """snapshots: list of (t, EmpiricalStats with histograms)."""
    lines = ["t,label,bin_left,bin_right,density"]
    for t, stats in snapshots:
        for lab in range(1, stats.rho.size + 1):
            edges = stats.edges
            dens = stats.density[lab - 1]
            for b in range(dens.size):
                lines.append(
                    f"{_fmt(t)},{lab},{_fmt(edges[b])},{_fmt(edges[b + 1])},{_fmt(dens[b])}"
                )
            if stats.overflow is not None and stats.overflow[lab - 1] > 0:
                lines.append(
                    f"{_fmt(t)},{lab},{_fmt(edges[-1])},inf,{_fmt(stats.overflow[lab - 1])}"
                )
    Path(path).write_text("\n".join(lines) + "\n")


def _write_density_csv(path, v, f):
    lines = ["v,density"]
    for a, b in zip(v, f):
        lines.append(f"{_fmt(a)},{_fmt(b)}")
    Path(path).write_text("\n".join(lines) + "\n")


def _ode_trajectory(config: ExperimentConfig, spec, times):
    """Integrate the macroscopic system and sample it on the MC record times."""
    rho0, M0 = config.initial.initial_macro()
    state0 = MacroState(rho0, M0)
    rates = spec.rate_table()
    dt_mc = config.run.dt
    substeps = max(1, int(round(dt_mc / 1e-3)))
    dt_ode = dt_mc / substeps
    _, states = integrate_rk4(
        state0,
        rates,
        dt=dt_ode,
        t_end=config.run.t_end,
        record_every=config.run.record_every * substeps,
    )
    rho = states[:, 0:2]
    M = states[:, 2:4]
    with np.errstate(invalid="ignore", divide="ignore"):
        m = np.where(rho > 0, M / np.maximum(rho, 1e-300), np.nan)
    if len(times) != len(states):
        raise RuntimeError("ODE and MC record grids disagree")
    return rho, M, m, rates, state0


def _record_times(config: ExperimentConfig):
    run = config.run
    n_steps = int(round(run.t_end / run.dt))
    ks = [k for k in range(0, n_steps + 1) if k % run.record_every == 0]
    if n_steps % run.record_every:
        ks.append(n_steps)
    return np.asarray([k * run.dt for k in ks])


def _histogram_snapshots(trajectories, spec, times):
    """Replica-0 snapshots over time; the final time pools all replicas."""
    snaps = []
    rep0 = trajectories[0]
    for t, stats in zip(rep0.times[:-1], rep0.stats[:-1]):
        if stats.edges is not None:
            snaps.append((t, stats))
    finals = [t.final_population for t in trajectories]
    pop = Population(
        np.concatenate([p.labels for p in finals]),
        np.concatenate([p.wealth for p in finals]),
        time=finals[0].time,
    )
    snaps.append((times[-1], empirical_stats(pop, spec.n, histograms=True)))
    return snaps


def _normalized_w1(sample_a: WeightedSample, sample_b: WeightedSample) -> float:
    return wasserstein1(sample_a.normalized(), sample_b.normalized())


def run_experiment(config: ExperimentConfig, out_dir, plots_enabled: bool = True) -> dict:
    """Execute one experiment and write its bundle into out_dir.

    Returns the summary dict (also stored as summary.json). See the module
    docstring for the bundle layout.
    """
    config = config.validate()
    spec = config.build_model()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.resolved").write_text(serialize_config(config))
    summary = {
        "mode": config.mode,
        "seed": config.run.seed,
        "config": config.to_dict(),
    }
    times = _record_times(config)

    if config.mode in ("mc", "compare", "qinv"):
        qinv = config.qinv.build() if config.mode == "qinv" else None
        n_records = len(times)
        trajectories, cfgs = run_replicas(
            config, spec, qinv=qinv, histogram_every=max(1, (n_records - 1) // 5)
        )
        mc_times, rho, M, m, clamped = replica_mean(trajectories)
        write_trajectory_csv(out / "trajectory.csv", mc_times, rho, M, m, clamped)
        snaps = _histogram_snapshots(trajectories, spec, mc_times)
        if snaps:
            write_histograms_csv(out / "histograms.csv", snaps)
        summary["clamped_total"] = int(sum(c.clamp_counter for c in cfgs))
        summary["rho_final_mc"] = [float(x) for x in rho[-1]]
        summary["m_final_mc"] = [float(x) for x in m[-1]]

    if config.mode in ("ode", "compare"):
        rho_o, M_o, m_o, rates, state0 = _ode_trajectory(config, spec, times)
        write_trajectory_csv(
            out / ("trajectory_ode.csv" if config.mode == "compare" else "trajectory.csv"),
            times,
            rho_o,
            M_o,
            m_o,
            np.zeros(len(times), dtype=int),
        )
        stat = stationary_summary(rates, state0)
        summary["stationary"] = {
            "alpha": stat.alpha,
            "rho_inf": [float(x) for x in stat.rho_inf],
            "m_inf": stat.m_inf,
            "M_inf": [float(x) for x in stat.M_inf],
            "switch_predicted": stat.switch_predicted,
        }

    if config.mode == "compare":
        drho = np.abs(rho - rho_o)
        dM = np.abs(M - M_o)
        dm = np.abs(m - m_o)
        header = ["t"]
        for name, arr in (("drho", drho), ("dM", dM), ("dm", dm)):
            header += [f"{name}_{k}" for k in range(1, spec.n + 1)]
        lines = [",".join(header)]
        for i, t in enumerate(times):
            row = [_fmt(t)]
            for arr in (drho, dM, dm):
                row += [_fmt(x) for x in arr[i]]
            lines.append(",".join(row))
        (out / "diffs.csv").write_text("\n".join(lines) + "\n")
        with np.errstate(invalid="ignore", divide="ignore"):
            rel_m = np.nanmax(dm / np.abs(m_o), axis=0)
        summary["compare"] = {
            "max_abs_rho_diff": [float(x) for x in drho.max(axis=0)],
            "max_abs_m_diff": [float(x) for x in np.nanmax(dm, axis=0)],
            "max_rel_m_diff": [float(x) for x in rel_m],
        }
        # equilibrium diagnostic: the two groups' normalized wealth laws coincide
        final = trajectories[0].final_population
        w_by_label = [final.wealth[final.labels == k] for k in (1, 2)]
        if min(len(w) for w in w_by_label) > 1:
            summary["compare"]["w1_f1_f2_final_normalized"] = _normalized_w1(
                WeightedSample.equal_weight(w_by_label[0]),
                WeightedSample.equal_weight(w_by_label[1]),
            )

    if config.mode == "qinv":
        rho0, M0 = config.initial.initial_macro()
        rates = spec.rate_table()
        stat = stationary_summary(rates, MacroState(rho0, M0))
        params = ParetoParams(
            alpha=stat.alpha,
            omega1=float(spec.exchange.omega[0]),
            omega2=float(spec.exchange.omega[1]),
            zeta=float(spec.exchange.zeta[0, 0]),
            rho_bar=float(rho0.sum()),
            M_bar=float(M0.sum()),
        )
        gamma = gamma_exponent(params)
        if config.qinv.density_grid:
            lo, hi, points = config.qinv.density_grid
            grid = np.geomspace(float(lo), float(hi), int(points))
        else:
            from scipy.stats import invgamma

            ig = invgamma(gamma + 1.0, scale=gamma * params.m_bar)
            grid = np.geomspace(max(ig.ppf(1e-12), 1e-9), ig.ppf(1.0 - 1e-9), 4000)
        density = stationary_density(grid, params)
        _write_density_csv(out / "analytic_density.csv", grid, density)
        pooled = np.concatenate(
            [t.final_population.wealth[t.final_population.labels == 1] for t in trajectories]
        )
        w1 = _normalized_w1(
            density_to_weighted_sample(grid, density), WeightedSample.equal_weight(pooled)
        )
        eps = config.qinv.epsilon
        summary["qinv"] = {
            "epsilon": eps,
            "variant": config.qinv.variant,
            "t_final": float(mc_times[-1]),
            "tau_final": float(eps * mc_times[-1]),
            "alpha": stat.alpha,
            "gamma": gamma,
            "pareto_index": gamma + 1.0,
            "m_bar": params.m_bar,
            "rho1_inf": params.mass1,
            "rho1_mc_final": float(rho[-1][0]),
            "mass_gap": abs(float(rho[-1][0]) - params.mass1),
            "w1_final_normalized": w1,
            "w1_bound_frac_of_mean": w1 / params.m_bar,
        }

    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    (out / "plot_run.py").write_text(Path(plots.__file__).read_text())
    if plots_enabled:
        plots.render_run(out)
    return summary
