"""Matplotlib rendering of interference curves with region shading."""

from __future__ import annotations

import re
from pathlib import Path
from typing import Mapping

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .analysis import InterferenceCurve, MetricKind, RegionClass  # noqa: E402

REGION_COLORS = {
    RegionClass.ABOVE: "#ff0000",
    RegionClass.CROSSING: "#ffcc00",
    RegionClass.BELOW: "#00a000",
}
BASELINE_COLOR = "#000000"
_LINE_COLORS = ["#1f77b4", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#7f7f7f", "#bcbd22",
                "#ff7f0e", "#2ca02c", "#d62728"]

STYLE = {
    "font.family": "DejaVu Sans",
    "font.size": 9,
    "axes.labelsize": 10,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.4,
    # fixed ids and no timestamp keep the SVG byte-identical across runs
    "svg.hashsalt": "memcontend",
    "svg.fonttype": "none",
}


def gid(*parts: str) -> str:
    return "-".join(re.sub(r"[^A-Za-z0-9_.]+", "_", p) for p in parts)


def plot_interference(ax, curves: Mapping[str, InterferenceCurve],
                      classes: Mapping[str, RegionClass], baseline: str | None):
    """Draw every curve on ``ax``; non-baseline curves get a shaded band
    between themselves and the baseline, coloured by region class."""
    base = curves.get(baseline) if baseline is not None else None
    for k, (label, curve) in enumerate(curves.items()):
        if label == baseline:
            continue
        cls = classes.get(label)
        if base is not None and cls is not None:
            band = ax.fill_between(curve.thr, base.values, curve.values,
                                   color=REGION_COLORS[cls], alpha=0.3, linewidth=0)
            band.set_gid(gid("band", cls.value, label))
        (line,) = ax.plot(curve.thr, curve.values, marker="o", markersize=3,
                          color=_LINE_COLORS[k % len(_LINE_COLORS)],
                          label=label if cls is None else f"{label} [{cls.value}]")
        line.set_gid(gid("curve", label))
    if base is not None:
        (line,) = ax.plot(base.thr, base.values, color=BASELINE_COLOR, linewidth=2.4,
                          linestyle="--", label=f"{baseline} (baseline)")
        line.set_gid(gid("baseline", baseline))
    ax.set_xlabel("THR%")
    ax.grid(linewidth=0.3, alpha=0.6)
    ax.set_xlim(min(c.thr[0] for c in curves.values()), max(c.thr[-1] for c in curves.values()))


def emit_svg(path: str | Path, curves: Mapping[str, InterferenceCurve],
             classes: Mapping[str, RegionClass] | None = None, baseline: str | None = None,
             title: str = "") -> Path:
    if not curves:
        raise ValueError("emit_svg needs at least one curve")
    classes = classes or {}
    kinds = {c.metric_kind for c in curves.values()}
    path = Path(path)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        plot_interference(ax, curves, classes, baseline)
        ax.set_ylabel("slowdown (x)" if kinds == {MetricKind.SLOWDOWN} else "RF")
        if title:
            ax.set_title(title)
        ax.legend(loc="upper left", frameon=False)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path
