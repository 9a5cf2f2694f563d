"""Matplotlib figures rendered next to the JSON and CSV reports.

Everything draws through the Agg backend so headless runs work, and
figures carry no timestamps, keeping report directories diffable.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_METRIC_COLORS = {"precision": "#4878cf", "recall": "#6acc65", "f1": "#d65f5f"}
_CATEGORY_COLORS = {"Tc": "#6acc65", "Tr": "#b8b8b8", "Tw": "#d65f5f", "Terr": "#ee854a"}


def _new_axes(width: float = 7.0, height: float = 4.0):
    fig, ax = plt.subplots(figsize=(width, height), dpi=150)
    ax.grid(axis="y", alpha=0.3, linewidth=0.5)
    ax.set_axisbelow(True)
    return fig, ax


def _save(fig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def save_metrics_bars(
    rows: Sequence[tuple[str, dict]], path: Path, title: str = "Detection metrics"
) -> Path:
    """Grouped precision/recall/f1 bars, one group per labeled row.

    Each row is (label, {"precision": .., "recall": .., "f1": ..}).
    """
    labels = [label for label, _ in rows]
    fig, ax = _new_axes(width=max(7.0, 1.8 * len(rows) + 3.0))
    width = 0.26
    for offset, metric in zip((-width, 0.0, width), ("recall", "precision", "f1")):
        values = [m[metric] for _, m in rows]
        ax.bar(
            [i + offset for i in range(len(rows))],
            values,
            width=width,
            label=metric,
            color=_METRIC_COLORS[metric],
        )
    ax.set_xticks(range(len(rows)))
    ax.set_xticklabels(labels, rotation=20, ha="right")
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("score")
    ax.set_title(title)
    ax.legend(frameon=False)
    return _save(fig, path)


def save_category_breakdown(
    counts: dict[str, float], path: Path, title: str = "Candidate categories"
) -> Path:
    """Bar per category of generated test cases (mean counts per round)."""
    keys = [k for k in ("Tc", "Tr", "Tw", "Terr") if k in counts]
    fig, ax = _new_axes(width=5.5)
    ax.bar(
        range(len(keys)),
        [counts[k] for k in keys],
        color=[_CATEGORY_COLORS[k] for k in keys],
    )
    ax.set_xticks(range(len(keys)))
    ax.set_xticklabels(keys)
    ax.set_ylabel("mean count per round")
    ax.set_title(title)
    return _save(fig, path)


def save_ablation_curves(
    rows: Sequence[dict], path: Path, metric: str = "f1", title: str | None = None
) -> Path:
    """One line per combination pattern, metric over k.

    Rows are flat dicts with pattern, pg_mode, ig_mode, dt_mode, k and
    metric values, as produced for the ablation CSV.
    """
    by_pattern: dict[int, list[dict]] = {}
    for row in rows:
        by_pattern.setdefault(row["pattern"], []).append(row)
    fig, ax = _new_axes()
    for pattern in sorted(by_pattern):
        entries = sorted(by_pattern[pattern], key=lambda r: r["k"])
        label = "{}: {}/{}/{}".format(
            pattern,
            entries[0]["pg_mode"],
            entries[0]["ig_mode"],
            entries[0]["dt_mode"],
        )
        ax.plot(
            [e["k"] for e in entries],
            [e[metric] for e in entries],
            marker="o",
            linewidth=1.5,
            label=label,
        )
    ax.set_xlabel("variants per round (k)")
    ax.set_ylabel(metric)
    ax.set_ylim(0, 1.05)
    ax.set_title(title or f"Stage combinations: {metric} by k")
    ax.legend(frameon=False, fontsize=8)
    return _save(fig, path)
