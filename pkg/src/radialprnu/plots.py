"""Matplotlib figure rendering for the bench report."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def save_alpha_profiles(profiles, path):
    """One curve of recovered alpha versus annulus mid-radius per image.

    ``profiles`` maps an image label to a list of (r_mid, alpha) pairs.
    """
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for label, pairs in profiles.items():
        if not pairs:
            continue
        rs, alphas = zip(*sorted(pairs))
        ax.plot(rs, alphas, marker="o", markersize=3, linewidth=1, label=label)
    ax.set_xlabel("normalized radius")
    ax.set_ylabel("recovered alpha")
    ax.set_title("Per-annulus distortion estimates")
    ax.grid(True, alpha=0.3)
    if len(profiles) <= 12:
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_cpce_trajectories(trajectories, threshold, path):
    """Cumulative statistic against the processing step, one line per image.

    ``trajectories`` maps an image label to the ordered CPCE values.
    """
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for label, values in trajectories.items():
        if not values:
            continue
        ax.plot(range(1, len(values) + 1), values, linewidth=1, label=label)
    ax.axhline(threshold, color="k", linestyle="--", linewidth=1,
               label="threshold")
    ax.set_xlabel("annuli processed")
    ax.set_ylabel("CPCE")
    ax.set_yscale("symlog")
    ax.set_title("Cumulative PCE trajectories")
    ax.grid(True, alpha=0.3)
    if len(trajectories) <= 12:
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
