"""Report figures rendered alongside the delimited outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["save_suite_figures"]

_COLORS = {"full": "#2b6cb0", "no_tva": "#c05621", "no_cps": "#6b46c1", "no_msp": "#9b2c2c"}


def _color(name: str, i: int) -> str:
    return _COLORS.get(name, f"C{i}")


def save_suite_figures(suite: dict, out_dir) -> list:
    """Render GSR and per-trial failure charts for a suite summary dict.

    Returns the list of written paths.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    variants = suite["variants"]
    names = list(variants)
    written = []

    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    gsrs = [variants[v]["gsr"] if variants[v]["gsr"] is not None else 0.0 for v in names]
    bars = ax.bar(names, gsrs, color=[_color(v, i) for i, v in enumerate(names)])
    for bar, g, v in zip(bars, gsrs, names):
        label = "n/a" if variants[v]["gsr"] is None else f"{g:.3f}"
        ax.annotate(label, (bar.get_x() + bar.get_width() / 2, g),
                    ha="center", va="bottom", fontsize=9)
    ax.set_ylabel("grasp success rate")
    ax.set_ylim(0, 1.05)
    ax.set_title(f"GSR over {len(suite['seeds'])} trials, {suite['n_objects']} objects")
    fig.tight_layout()
    path = out / "gsr_by_variant.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(6.0, 3.2))
    n_trials = len(suite["seeds"])
    x = np.arange(n_trials)
    width = 0.8 / max(len(names), 1)
    for i, v in enumerate(names):
        fails = [t["failures"] for t in variants[v]["trials"]]
        ax.bar(x + i * width, fails, width, label=v, color=_color(v, i))
    ax.set_xticks(x + 0.4 - width / 2)
    ax.set_xticklabels([f"T{i + 1}" for i in range(n_trials)], fontsize=8)
    ax.set_ylabel("failed grasps")
    ax.set_title("failures per trial")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = out / "failures_by_trial.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)
    return written
