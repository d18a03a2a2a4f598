"""Report figures, rendered straight to files next to the delimited output."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_PNG_KW = {"dpi": 130, "metadata": {"Software": None}}
CLUSTER_CMAP = plt.get_cmap("tab10")


def _cluster_color(label: int):
    return CLUSTER_CMAP(label % 10)


def plot_scan_overview(scan, scales, path) -> None:
    """Community count, stability and ensemble VI across Markov time."""
    fig, (ax1, ax3) = plt.subplots(
        2, 1, figsize=(7.0, 5.4), sharex=True, height_ratios=[2, 1]
    )
    ax1.step(scan.times, scan.n_communities, where="post", color="crimson", lw=1.6)
    ax1.set_xscale("log")
    ax1.set_yscale("log")
    ax1.set_ylabel("number of communities", color="crimson")
    ax1.tick_params(axis="y", colors="crimson")
    ax2 = ax1.twinx()
    ax2.plot(scan.times, scan.r_star, color="steelblue", lw=1.2)
    ax2.set_ylabel("stability $r^*(t)$", color="steelblue")
    ax2.tick_params(axis="y", colors="steelblue")
    for s in scales:
        ax1.axvspan(s.t_start, s.t_end, color="0.85", zorder=0)
        ax1.axvline(s.t, color="0.4", lw=0.8, ls="--")
    ax3.plot(scan.times, scan.vi_t, color="darkcyan", lw=1.4)
    ax3.set_xscale("log")
    ax3.set_xlabel("Markov time $t$")
    ax3.set_ylabel("VI(t)")
    ax3.set_ylim(bottom=0)
    fig.tight_layout()
    fig.savefig(path, **_PNG_KW)
    plt.close(fig)


def plot_vi_heatmap(scan, path) -> None:
    """Cross-time VI heatmap; dark diagonal blocks mark persistent scales."""
    fig, ax = plt.subplots(figsize=(6.0, 5.0))
    logt = np.log10(scan.times)
    mesh = ax.pcolormesh(
        logt, logt, scan.cross_vi, cmap="Greys_r", vmin=0.0, shading="nearest"
    )
    ax.set_xlabel(r"$\log_{10} t$")
    ax.set_ylabel(r"$\log_{10} t'$")
    fig.colorbar(mesh, ax=ax, label="VI(t, t')")
    fig.tight_layout()
    fig.savefig(path, **_PNG_KW)
    plt.close(fig)


def plot_cluster_curves(curves, cohort_curve, path) -> None:
    """Per-cluster GP mean trajectories with 2-sigma bands."""
    fig, ax = plt.subplots(figsize=(7.0, 4.6))
    if cohort_curve is not None:
        ax.plot(cohort_curve.query, cohort_curve.mean, color="black", lw=1.8,
                label="cohort")
    for label, curve in curves:
        color = _cluster_color(label)
        sd = np.sqrt(curve.variance)
        ax.plot(curve.query, curve.mean, color=color, lw=1.4, label=f"cluster {label}")
        ax.fill_between(curve.query, curve.mean - 2 * sd, curve.mean + 2 * sd,
                        color=color, alpha=0.15, lw=0)
    ax.set_xlabel("task index")
    ax.set_ylabel("completion time (days)")
    ax.legend(fontsize=8, ncol=2)
    fig.tight_layout()
    fig.savefig(path, **_PNG_KW)
    plt.close(fig)


def plot_stats_scatter(stats, path) -> None:
    """Massed-session length against completion, coloured by cluster."""
    fig, ax = plt.subplots(figsize=(6.0, 4.6))
    labels = sorted({s.cluster_label for s in stats})
    for label in labels:
        xs = [s.mean_massed_session_length for s in stats if s.cluster_label == label]
        ys = [s.completion_pct for s in stats if s.cluster_label == label]
        color = "0.6" if label < 0 else _cluster_color(label)
        name = "unclustered" if label < 0 else f"cluster {label}"
        ax.scatter(xs, ys, s=22, color=color, label=name, alpha=0.85, edgecolors="none")
    ax.set_xlabel("mean massed session length (tasks)")
    ax.set_ylabel("tasks completed (%)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_PNG_KW)
    plt.close(fig)
