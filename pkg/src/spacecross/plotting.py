"""Render sweep results to PNG files.

Everything here is presentation-only: the delimited outputs written by
:mod:`spacecross.experiment` remain the canonical record, and the
figures are derived from the same aggregate rows.  Uses the Agg backend
so rendering works headless.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .experiment import AggRow

_METRIC_LABELS = {
    "delivery_ratio": "delivery ratio",
    "avg_latency_s": "average delivery latency (s)",
}


def _series(agg: Sequence[AggRow], metric: str, label_prefix: str = ""):
    """Yield (label, ttls, means, stds) per (router, alpha), sorted."""
    groups: dict[tuple[str, float], list[AggRow]] = {}
    for row in agg:
        groups.setdefault((row.router, row.alpha), []).append(row)
    for (router, alpha), rows in sorted(groups.items()):
        rows.sort(key=lambda r: r.ttl_s)
        if metric == "delivery_ratio":
            points = [(r.ttl_s, r.ratio_mean, r.ratio_std) for r in rows]
        else:
            points = [
                (r.ttl_s, r.latency_mean, r.latency_std)
                for r in rows
                if r.latency_mean is not None
            ]
        if not points:
            continue
        ttls = [p[0] for p in points]
        means = [p[1] for p in points]
        stds = [0.0 if p[2] is None else p[2] for p in points]
        yield f"{label_prefix}{router} alpha={alpha:g}", ttls, means, stds


def render_metric_figure(
    agg: Sequence[AggRow],
    metric: str,
    path: Path,
    title: str | None = None,
) -> Path:
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for label, ttls, means, stds in _series(agg, metric):
        ax.errorbar(ttls, means, yerr=stds, marker="o", capsize=3, label=label)
    ax.set_xscale("log")
    ax.set_xlabel("message ttl (s)")
    ax.set_ylabel(_METRIC_LABELS.get(metric, metric))
    if metric == "delivery_ratio":
        ax.set_ylim(bottom=0.0)
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize="small")
    fig.tight_layout()
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_sweep_figures(agg: Sequence[AggRow], outdir: Path) -> list[Path]:
    """The two standard figures: delivery ratio and latency vs ttl."""
    return [
        render_metric_figure(agg, "delivery_ratio", outdir / "delivery_ratio.png"),
        render_metric_figure(agg, "avg_latency_s", outdir / "avg_latency.png"),
    ]


def render_comparison_figures(
    agg_by_pipeline: Mapping[str, Sequence[AggRow]], outdir: Path
) -> list[Path]:
    """Overlay the two detector pipelines on shared axes, one per metric."""
    written = []
    for metric, stem in (("delivery_ratio", "compare_delivery_ratio"),
                         ("avg_latency_s", "compare_avg_latency")):
        fig, ax = plt.subplots(figsize=(7.0, 4.5))
        for pipeline in sorted(agg_by_pipeline):
            for label, ttls, means, stds in _series(
                agg_by_pipeline[pipeline], metric, label_prefix=f"[{pipeline}] "
            ):
                ax.errorbar(ttls, means, yerr=stds, marker="o", capsize=3, label=label)
        ax.set_xscale("log")
        ax.set_xlabel("message ttl (s)")
        ax.set_ylabel(_METRIC_LABELS.get(metric, metric))
        if metric == "delivery_ratio":
            ax.set_ylim(bottom=0.0)
        ax.grid(True, which="both", alpha=0.3)
        ax.legend(fontsize="small")
        fig.tight_layout()
        target = outdir / f"{stem}.png"
        target.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(target, dpi=120)
        plt.close(fig)
        written.append(target)
    return written
