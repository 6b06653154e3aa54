#!/usr/bin/env python3
"""Render figures for a run directory from its CSV outputs.

Self-contained on purpose: it reads only the CSVs (trajectory.csv, optional
trajectory_ode.csv, histograms.csv, analytic_density.csv) plus matplotlib,
so a verbatim copy dropped into a run directory keeps working without this
package installed. Usage as a script:

    python plot_run.py [RUN_DIR]
"""

import argparse
import csv
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read_csv_columns(path):
    """CSV -> dict of float columns keyed by header name."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        cols = {name: [] for name in header}
        for row in reader:
            for name, value in zip(header, row):
                cols[name].append(float(value))
    return cols


def _labels_in(cols, prefix):
    k = 1
    out = []
    while f"{prefix}{k}" in cols:
        out.append(k)
        k += 1
    return out


def plot_trajectory(run_dir, out_path):
    """Masses, means, and first moments vs time; overlays the ODE tier if present."""
    run_dir = Path(run_dir)
    mc = read_csv_columns(run_dir / "trajectory.csv")
    ode_path = run_dir / "trajectory_ode.csv"
    ode = read_csv_columns(ode_path) if ode_path.exists() else None
    labels = _labels_in(mc, "rho_")
    fig, axes = plt.subplots(1, 3, figsize=(13, 3.6))
    panels = [("rho_", "mass"), ("m_", "mean wealth"), ("M_", "first moment")]
    for ax, (prefix, title) in zip(axes, panels):
        for k in labels:
            (line,) = ax.plot(
                mc["t"], mc[f"{prefix}{k}"], "o", ms=2.5, label=f"group {k}"
            )
            if ode is not None:
                ax.plot(ode["t"], ode[f"{prefix}{k}"], "-", color=line.get_color(), lw=1.2)
        ax.set_xlabel("t")
        ax.set_ylabel(title)
        ax.legend(fontsize=8)
    if ode is not None:
        fig.suptitle("circles: Monte Carlo   lines: macroscopic ODEs", fontsize=9)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def plot_histograms(run_dir, out_path):
    """Per-group wealth densities at the recorded snapshot times."""
    run_dir = Path(run_dir)
    path = run_dir / "histograms.csv"
    if not path.exists():
        return None
    rows = read_csv_columns(path)
    times = sorted(set(rows["t"]))
    labels = sorted({int(l) for l in rows["label"]})
    fig, axes = plt.subplots(1, len(labels), figsize=(6 * len(labels), 3.8), squeeze=False)
    for ax, lab in zip(axes[0], labels):
        for t in times:
            xs, ys = [], []
            for tt, ll, left, right, dens in zip(
                rows["t"], rows["label"], rows["bin_left"], rows["bin_right"], rows["density"]
            ):
                if tt == t and int(ll) == lab and math.isfinite(right):
                    xs.append(0.5 * (left + right))
                    ys.append(dens)
            if xs:
                ax.plot(xs, ys, lw=1.0, label=f"t = {t:g}")
        density_path = run_dir / "analytic_density.csv"
        if density_path.exists() and lab == 1:
            dens = read_csv_columns(density_path)
            ax.plot(dens["v"], dens["density"], "k--", lw=1.4, label="analytic steady state")
        ax.set_xlabel("wealth")
        ax.set_ylabel(f"f_{lab}")
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def render_run(run_dir, out_dir=None):
    """Write trajectory.png (and histograms.png when data exists); returns paths."""
    run_dir = Path(run_dir)
    out_dir = Path(out_dir) if out_dir else run_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if (run_dir / "trajectory.csv").exists():
        written.append(plot_trajectory(run_dir, out_dir / "trajectory.png"))
    hist = plot_histograms(run_dir, out_dir / "histograms.png")
    if hist:
        written.append(hist)
    return [str(p) for p in written]


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("run_dir", nargs="?", default=".", help="run directory (default: .)")
    args = parser.parse_args(argv)
    for path in render_run(args.run_dir):
        print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
