"""Figure rendering for the CLI report path.

Every function takes arrays already computed by a subcommand and
writes one PNG next to the delimited data file.  Rendering is opt-in
(--plot) and never changes the data outputs.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "plot_transmission", "plot_scatter", "plot_eigenfunction", "plot_ness",
    "plot_evolve", "plot_alpha_sweep",
]


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return str(path)


def plot_transmission(lam, t_vals, path):
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    ax.plot(lam, t_vals, lw=1.2)
    ax.set_xlabel("energy")
    ax.set_ylabel("transmission")
    ax.set_ylim(-0.02, 1.02)
    return _save(fig, path)


def plot_scatter(lam, entries, path):
    """entries: mapping label -> complex array over lam."""
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    for label, vals in entries.items():
        ax.plot(lam, np.abs(vals) ** 2, lw=1.0, label=f"|{label}|^2")
    ax.set_xlabel("energy")
    ax.set_ylabel("squared magnitude")
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_eigenfunction(x, phi_b, phi_a, path):
    fig, axes = plt.subplots(2, 1, figsize=(6.0, 4.6), sharex=True)
    for ax, phi, label in ((axes[0], phi_b, "channel b"),
                           (axes[1], phi_a, "channel a")):
        if phi is not None:
            ax.plot(x, phi.real, lw=0.9, label="Re")
            ax.plot(x, phi.imag, lw=0.9, label="Im")
            ax.plot(x, np.abs(phi), lw=1.1, color="k", label="|phi|")
        ax.set_ylabel(label)
        ax.legend(fontsize=7, loc="upper right")
    axes[1].set_xlabel("x")
    return _save(fig, path)


def plot_ness(x, u_total, u_bound, u_continuum, path):
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    ax.plot(x, u_total, lw=1.3, color="k", label="total")
    ax.plot(x, u_continuum, lw=1.0, label="continuum")
    ax.plot(x, u_bound, lw=1.0, label="bound")
    ax.set_xlabel("x")
    ax.set_ylabel("carrier density")
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_evolve(t, values, running_mean, path, reference=None):
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    ax.plot(t, values, lw=0.8, label="observable")
    ax.plot(t, running_mean, lw=1.2, label="running mean")
    if reference is not None:
        ax.axhline(reference, color="k", lw=0.8, ls="--", label="stationary")
    ax.set_xlabel("t")
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_alpha_sweep(traces, path, reference=None):
    """traces: mapping label -> (t, values)."""
    fig, ax = plt.subplots(figsize=(6.4, 3.8))
    for label, (t, values) in traces.items():
        ax.plot(t, values, lw=0.9, label=label)
    if reference is not None:
        ax.axhline(reference, color="k", lw=0.8, ls="--", label="stationary")
    ax.set_xlabel("t")
    ax.set_ylabel("current")
    ax.legend(fontsize=8)
    return _save(fig, path)
