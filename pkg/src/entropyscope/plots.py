"""Matplotlib rendering for the bundled experiments (file output only)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_ENTROPY_LABEL = {"vn": "von Neumann entropy", "renyi": "2-Renyi entropy"}
_SAVE_OPTS = {"dpi": 150, "metadata": {"Software": "entropyscope"}}


def convergence_figure(curves: dict, oracles: dict, path) -> Path:
    """Repeat-averaged running estimates with a std band per error budget."""
    fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharex=True)
    for ax, entropy in zip(axes, ("vn", "renyi")):
        for eps in sorted({eps for (ent, eps) in curves if ent == entropy}):
            mat = curves[(entropy, eps)]
            x = np.arange(1, mat.shape[1] + 1)
            mean = np.nanmean(mat, axis=0)
            std = np.nanstd(mat, axis=0)
            ax.plot(x, mean, label=f"eps = {eps}")
            ax.fill_between(x, mean - std, mean + std, alpha=0.25)
        ax.axhline(oracles[entropy], color="k", linestyle="--", linewidth=1, label="exact")
        ax.set_xlabel("sampled terms")
        ax.set_title(_ENTROPY_LABEL[entropy])
        ax.legend()
    axes[0].set_ylabel("running estimate")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)
    return Path(path)


def state_batch_figure(rows: list, path) -> Path:
    """Grouped bars: oracle, series value, and mean estimate with std bars."""
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    width = 0.27
    for ax, entropy in zip(axes, ("vn", "renyi")):
        subset = [r for r in rows if r["entropy"] == entropy]
        x = np.arange(len(subset))
        ax.bar(x - width, [r["oracle"] for r in subset], width, label="exact")
        ax.bar(x, [r["series_value"] for r in subset], width, label="series")
        ax.bar(
            x + width,
            [r["mean_estimate"] for r in subset],
            width,
            yerr=[r["std_estimate"] for r in subset],
            capsize=3,
            label="estimated",
        )
        ax.set_xticks(x, [r["state"] for r in subset])
        ax.set_title(_ENTROPY_LABEL[entropy])
        ax.legend()
    axes[0].set_ylabel("entropy (nats)")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)
    return Path(path)


def noise_sweep_figure(all_rows: dict, path) -> Path:
    """Estimates vs noise level against the noisy- and clean-state oracles."""
    fig, axes = plt.subplots(2, 2, figsize=(10, 7), sharex=True)
    pairs = [
        ("vn", "amplitude_damping"),
        ("vn", "depolarizing"),
        ("renyi", "amplitude_damping"),
        ("renyi", "depolarizing"),
    ]
    for ax, key in zip(axes.flat, pairs):
        rows = all_rows[key]
        p = [r.p for r in rows]
        ax.errorbar(
            p,
            [r.estimate for r in rows],
            yerr=[r.stderr for r in rows],
            marker="o",
            capsize=3,
            label="estimate",
            color="tab:green",
        )
        ax.plot(p, [r.oracle_noisy for r in rows], marker=".", color="tab:blue", label="exact (noisy)")
        ax.axhline(rows[0].oracle_clean, color="k", linestyle="--", linewidth=1, label="exact (clean)")
        ax.set_title(f"{_ENTROPY_LABEL[key[0]]}, {key[1].replace('_', ' ')}")
        ax.legend(fontsize=8)
    for ax in axes[1]:
        ax.set_xlabel("noise level p")
    for ax in axes[:, 0]:
        ax.set_ylabel("entropy (nats)")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)
    return Path(path)
