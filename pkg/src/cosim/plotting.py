"""Figure rendering for the CLI report path.

Renders matplotlib figures to files next to the delimited output.  Uses the
Agg backend so runs never require a display.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .core import StepRecord
from .indicator import EPSILON_FLOOR
from .master import ComparisonSeries


def plot_run(records: Sequence[StepRecord], path: Path) -> Path:
    """Outputs, error indicator, step size and total energy over time."""
    times = [r.t for r in records]
    have_energy = any(math.isfinite(r.energy) for r in records)
    n_rows = 4 if have_energy else 3
    fig, axes = plt.subplots(n_rows, 1, figsize=(9, 2.4 * n_rows), sharex=True)

    ax = axes[0]
    for k, label in enumerate(records[0].y.labels or
                              [f"y{k}" for k in range(len(records[0].y))]):
        unit = records[0].y.units[k] if records[0].y.units else ""
        ax.plot(times, [r.y.values[k] for r in records],
                label=f"{label} [{unit}]" if unit else label)
    ax.set_ylabel("outputs")
    ax.legend(loc="upper right")
    ax.grid(True, alpha=0.3)

    ax = axes[1]
    ax.semilogy(times, [max(r.eps, EPSILON_FLOOR) for r in records], color="tab:red")
    ax.axhline(1.0, color="k", lw=0.8, ls="--")
    ax.set_ylabel("error indicator")
    ax.grid(True, alpha=0.3)

    ax = axes[2]
    ax.plot(times, [r.dt for r in records], drawstyle="steps-post", color="tab:green")
    ax.set_ylabel("step size [s]")
    ax.grid(True, alpha=0.3)

    if have_energy:
        ax = axes[3]
        ax.plot(times, [r.energy for r in records], color="tab:purple")
        ax.set_ylabel("energy [J]")
        ax.grid(True, alpha=0.3)

    axes[-1].set_xlabel("time [s]")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_sweep(rows: Sequence[dict], path: Path) -> Path:
    """Cumulative energy residual against macro step size (log-log)."""
    fig, ax = plt.subplots(figsize=(7, 5))
    ok = [r for r in rows if not r["diverged"]]
    bad = [r for r in rows if r["diverged"]]
    if ok:
        ax.loglog([r["dt"] for r in ok], [r["cumulative_abs_delta_e"] for r in ok],
                  "o-", label="stable")
    if bad:
        ax.loglog([r["dt"] for r in bad], [r["cumulative_abs_delta_e"] for r in bad],
                  "x", color="tab:red", markersize=10, label="diverged")
    ax.set_xlabel("macro step size [s]")
    ax.set_ylabel("cumulative |residual energy| [J]")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_compare(comparison: ComparisonSeries, labels: Sequence[str],
                 path: Path) -> Path:
    """Per-output coupling error and total-energy error against the oracle."""
    fig, axes = plt.subplots(2, 1, figsize=(9, 6), sharex=True)
    ax = axes[0]
    for k, label in enumerate(labels):
        ax.semilogy(
            comparison.times,
            [max(abs(d[k]), 1e-300) for d in comparison.dy],
            label=f"|d{label}|",
        )
    ax.set_ylabel("coupling error")
    ax.legend(loc="upper right")
    ax.grid(True, alpha=0.3)

    ax = axes[1]
    ax.plot(comparison.times, comparison.energy_error, color="tab:purple")
    ax.set_ylabel("energy error [J]")
    ax.set_xlabel("time [s]")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
