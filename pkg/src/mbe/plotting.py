"""Regret figures: one mean curve per algorithm with a +-1 stderr band,
rendered straight to SVG."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .simulate import AggregatedResult

__all__ = ["emit_plot_svg"]

# keep text as <text> elements so the output stays small and inspectable
matplotlib.rcParams["svg.fonttype"] = "none"


def emit_plot_svg(
    agg: AggregatedResult,
    path: str,
    log_x: bool = False,
    log_y: bool = False,
    title: str | None = None,
) -> None:
    if not agg.mean:
        raise ValueError("nothing to plot")
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for label in agg.mean:
        t = agg.checkpoints
        mean = agg.mean[label]
        band = agg.stderr[label]
        (line,) = ax.plot(t, mean, label=label, linewidth=1.6)
        ax.fill_between(t, mean - band, mean + band, color=line.get_color(), alpha=0.2, linewidth=0)
    if log_x:
        ax.set_xscale("log")
    if log_y:
        ax.set_yscale("log")
    ax.set_xlabel("round")
    ax.set_ylabel("cumulative regret")
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
