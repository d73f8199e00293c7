"""Evaluation figures rendered to PNG files.

Kept separate from evaluation so the headless backend is only configured
when figures are actually requested.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .classifier import ROLES

_ROLE_COLORS = {"case": "#4878cf", "activity": "#6acc65", "timestamp": "#d65f5f"}


def accuracy_figure(result, path: Path) -> Path:
    """Bar chart of per-role identification accuracy."""
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    xs = range(len(ROLES))
    values = [result.accuracy[role] for role in ROLES]
    ax.bar(xs, values, color=[_ROLE_COLORS[r] for r in ROLES], width=0.6)
    for x, v in zip(xs, values):
        ax.text(x, min(v + 0.03, 1.02), "%.2f" % v, ha="center", fontsize=9)
    ax.set_xticks(list(xs))
    ax.set_xticklabels(ROLES)
    ax.set_ylim(0, 1.1)
    ax.set_ylabel("accuracy")
    ax.set_title("Key-attribute identification accuracy (%d logs)"
                 % len(result.outcomes))
    ax.grid(True, axis="y", linestyle="--", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def timing_figure(result, path: Path) -> Path:
    """Per-log stage timings, with corpus means in the legend."""
    fig, ax = plt.subplots(figsize=(6.4, 3.4))
    xs = range(len(result.outcomes))
    s1 = [o.stage1_s * 1000 for o in result.outcomes]
    s2 = [o.stage2_s * 1000 if o.stage == "two-stage" else 0.0
          for o in result.outcomes]
    width = 0.4
    mean2 = ("%.1f ms" % (result.mean_stage2_s * 1000)
             if result.mean_stage2_s is not None else "n/a")
    ax.bar([x - width / 2 for x in xs], s1, width=width, color="#4878cf",
           label="stage 1 (mean %.1f ms)" % (result.mean_stage1_s * 1000))
    ax.bar([x + width / 2 for x in xs], s2, width=width, color="#ee854a",
           label="stage 2 (mean %s)" % mean2)
    ax.set_xticks(list(xs))
    ax.set_xticklabels([o.name.replace("log_", "") for o in result.outcomes],
                       fontsize=7)
    ax.set_xlabel("log")
    ax.set_ylabel("time (ms)")
    ax.set_title("Stage timings per log")
    ax.legend(fontsize=8)
    ax.grid(True, axis="y", linestyle="--", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def render_evaluation_figures(result, out_dir: Path) -> list[Path]:
    out_dir = Path(out_dir)
    return [
        accuracy_figure(result, out_dir / "accuracy.png"),
        timing_figure(result, out_dir / "timings.png"),
    ]
