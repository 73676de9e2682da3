"""Evaluation report rendering: delimited per-query output plus figures.

The metrics module stays computation-only; this module turns a MetricReport
(and optional per-class breakdowns) into a CSV of per-query values and PNG
figures written next to the JSON output.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .metrics import MetricReport


def write_metrics_csv(path: str | Path, rows: list[dict]) -> Path:
    """Write per-query metric rows (query_id, class, ap, rr, ...) as CSV."""
    path = Path(path)
    if not rows:
        path.write_text("", encoding="utf-8")
        return path
    fieldnames = list(rows[0])
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)
    return path


def _bar(ax, labels: list[str], values: list[float], title: str) -> None:
    ax.bar(range(len(labels)), values, color="#4878a8")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=30, ha="right")
    ax.set_ylim(0.0, 1.0)
    ax.set_title(title)
    for i, v in enumerate(values):
        ax.text(i, v + 0.02, f"{v:.3f}", ha="center", fontsize=8)


def render_metric_figures(
    outdir: str | Path,
    overall: MetricReport,
    per_class: dict[str, MetricReport] | None = None,
) -> list[Path]:
    """Render summary figures; returns the written file paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    labels = ["MAP", "MRR"] + [f"HIT@{k}" for k in sorted(overall.hit_at)]
    values = [overall.map, overall.mrr] + [overall.hit_at[k] for k in sorted(overall.hit_at)]
    fig, ax = plt.subplots(figsize=(6, 4))
    _bar(ax, labels, values, "Retrieval metrics")
    fig.tight_layout()
    path = outdir / "metrics_summary.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    if per_class:
        classes = sorted(per_class)
        fig, ax = plt.subplots(figsize=(6, 4))
        width = 0.35
        xs = range(len(classes))
        ax.bar([x - width / 2 for x in xs], [per_class[c].map for c in classes], width, label="MAP")
        ax.bar([x + width / 2 for x in xs], [per_class[c].mrr for c in classes], width, label="MRR")
        ax.set_xticks(list(xs))
        ax.set_xticklabels(classes)
        ax.set_ylim(0.0, 1.0)
        ax.set_title("Per-class MAP / MRR")
        ax.legend()
        fig.tight_layout()
        path = outdir / "metrics_per_class.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written
