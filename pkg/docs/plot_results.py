#!/usr/bin/env python3
"""Plotting template for lattice-lab run artifacts.

The core package emits data only (CSV + JSON); this standalone script turns a
run directory into quick-look figures.  Requires matplotlib, which is not a
package dependency.

Usage: python docs/plot_results.py runs/<command>-<hash>
"""

import json
import sys
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np


def load_csv(path):
    data = np.genfromtxt(path, delimiter=",", names=True)
    return data


def plot_run(run_dir: Path):
    meta = json.loads((run_dir / "metadata.json").read_text())
    command = meta["command"]
    fig_path = run_dir / "figures.png"

    if command == "stationary":
        data = load_csv(run_dir / "stationary.csv")
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
        ax1.plot(data["p"], data["w"])
        ax1.set(xlabel="p", ylabel="w0(p)")
        mask = data["p"] > 0
        ax2.loglog(data["p"][mask], data["w"][mask])
        ax2.set(xlabel="p", ylabel="w0(p)", title="power-law tail")
    elif command == "evolve":
        traj = load_csv(run_dir / "trajectory.csv")
        field = load_csv(run_dir / "final_field.csv")
        fig, axes = plt.subplots(2, 2, figsize=(9, 6))
        axes[0, 0].plot(traj["t"], traj["l1_to_w0"])
        axes[0, 0].set(xlabel="t", ylabel="L1 distance to w0", yscale="log")
        axes[0, 1].plot(traj["t"], traj["mass"] - 1.0)
        axes[0, 1].set(xlabel="t", ylabel="mass - 1")
        axes[1, 0].plot(traj["t"], traj["m2"])
        axes[1, 0].set(xlabel="t", ylabel="second moment")
        axes[1, 1].plot(field["p"], field["w"])
        axes[1, 1].set(xlabel="p", ylabel="w(p, t_end)")
    elif command == "scan":
        data = load_csv(run_dir / "scan.csv")
        summary = json.loads((run_dir / "scan_summary.json").read_text())
        fig, ax = plt.subplots(figsize=(5, 4))
        for name in ("abs_A0", "abs_A1", "abs_A2"):
            ax.loglog(data["p"], data[name], label=name)
        ax.set(xlabel="p", title=f"slopes: {summary['slopes']}")
        ax.legend()
    elif command == "flow":
        data = load_csv(run_dir / "orbit.csv")
        fig, ax = plt.subplots(figsize=(5, 4))
        ax.plot(data["p"], data["w"], marker=".")
        ax.set(xlabel="p(s)", ylabel="w(s)", title="group orbit")
    else:
        print(f"no plot template for command {command!r}")
        return

    fig.suptitle(f"{command} ({run_dir.name})")
    fig.tight_layout()
    fig.savefig(fig_path, dpi=150)
    print(f"wrote {fig_path}")


if __name__ == "__main__":
    if len(sys.argv) != 2:
        sys.exit(__doc__)
    plot_run(Path(sys.argv[1]))
