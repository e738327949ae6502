"""SVG figures, each written next to a CSV holding exactly the plotted numbers."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams["svg.hashsalt"] = "ecgi"
plt.rcParams["svg.fonttype"] = "none"
plt.rcParams["path.simplify"] = False


def fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_table(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_table(path: str | Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def _save(fig, stem: Path) -> Path:
    out = stem.with_suffix(".svg")
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return out


def bar_chart(stem, labels, series: dict[str, Sequence[float]], title="", ylabel="") -> Path:
    """Grouped bars: one group per label, one bar per series."""
    stem = Path(stem)
    names = list(series)
    write_table(stem.with_suffix(".csv"), ["label", *names],
                ([lab, *(series[n][i] for n in names)] for i, lab in enumerate(labels)))
    fig, ax = plt.subplots(figsize=(7, 3.5))
    x = np.arange(len(labels))
    width = 0.8 / max(len(names), 1)
    for j, n in enumerate(names):
        ax.bar(x + j * width - 0.4 + width / 2, series[n], width, label=n)
    ax.set_xticks(x, [str(lab) for lab in labels])
    ax.set_title(title)
    ax.set_ylabel(ylabel)
    if len(names) > 1:
        ax.legend(fontsize="small")
    return _save(fig, stem)


def heatmap(stem, row_names, col_names, matrix, title="") -> Path:
    stem = Path(stem)
    m = np.asarray(matrix, dtype=np.float64)
    write_table(stem.with_suffix(".csv"), ["", *col_names],
                ([r, *m[i]] for i, r in enumerate(row_names)))
    fig, ax = plt.subplots(figsize=(1 + 0.6 * len(col_names), 1 + 0.5 * len(row_names)))
    im = ax.imshow(np.ma.masked_invalid(m), cmap="viridis")
    ax.set_xticks(range(len(col_names)), col_names, rotation=45)
    ax.set_yticks(range(len(row_names)), row_names)
    for i in range(m.shape[0]):
        for j in range(m.shape[1]):
            if np.isfinite(m[i, j]):
                ax.text(j, i, f"{m[i, j]:.2g}", ha="center", va="center", fontsize=7, color="w")
    fig.colorbar(im, ax=ax)
    ax.set_title(title)
    return _save(fig, stem)


def saliency_strip(stem, beat, saliency, title="") -> Path:
    """Sample beat drawn over a heat strip of its saliency values."""
    stem = Path(stem)
    beat = np.asarray(beat)
    saliency = np.asarray(saliency)
    write_table(stem.with_suffix(".csv"), ["t", "beat", "saliency"],
                zip(range(len(beat)), beat, saliency))
    fig, ax = plt.subplots(figsize=(7, 3))
    lo, hi = float(beat.min()), float(beat.max())
    ax.imshow(saliency[None, :], aspect="auto", cmap="jet", alpha=0.5,
              extent=(0, len(beat), lo, hi if hi > lo else lo + 1))
    ax.plot(beat, color="k", linewidth=1)
    for k in range(1, 11):
        ax.axvline(20 * k, color="grey", linewidth=0.4)
    ax.set_title(title)
    return _save(fig, stem)


def quantile_plot(stem, series: dict[str, np.ndarray], title="") -> Path:
    """Per-segment mean with 25-75% band for each named sample matrix ``(n, 11)``."""
    stem = Path(stem)
    seg = np.arange(1, 12)
    rows, stats = [], {}
    for name, sample in series.items():
        sample = np.atleast_2d(np.asarray(sample, dtype=np.float64))
        mean = sample.mean(axis=0)
        q25, q75 = np.quantile(sample, [0.25, 0.75], axis=0)
        stats[name] = (mean, q25, q75)
        rows += [[name, s, mean[s - 1], q25[s - 1], q75[s - 1]] for s in seg]
    write_table(stem.with_suffix(".csv"), ["method", "segment", "mean", "q25", "q75"], rows)
    fig, ax = plt.subplots(figsize=(7, 3.5))
    for name, (mean, q25, q75) in stats.items():
        ax.plot(seg, mean, marker="o", label=name)
        ax.fill_between(seg, q25, q75, alpha=0.25)
    ax.set_xticks(seg)
    ax.set_xlabel("segment")
    ax.legend(fontsize="small")
    ax.set_title(title)
    return _save(fig, stem)


def line_plot(stem, x, series: dict[str, Sequence[float]], xlabel="", ylabel="", title="") -> Path:
    stem = Path(stem)
    names = list(series)
    write_table(stem.with_suffix(".csv"), [xlabel or "x", *names],
                ([xv, *(series[n][i] for n in names)] for i, xv in enumerate(x)))
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for n in names:
        ax.plot(x, series[n], label=n)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    if len(names) > 1:
        ax.legend(fontsize="small")
    return _save(fig, stem)


def pdp_plot(stem, curves) -> Path:
    """Small multiples of one-way partial dependence curves."""
    stem = Path(stem)
    write_table(stem.with_suffix(".csv"), ["segment", "target_class", "grid", "mean_response"],
                ([c.segment_id, c.target_class, g, r] for c in curves for g, r in zip(c.grid, c.mean_response)))
    fig, axes = plt.subplots(2, 6, figsize=(12, 4), sharey=True)
    for ax in axes.flat[len(curves):]:
        ax.set_axis_off()
    for ax, c in zip(axes.flat, curves):
        ax.plot(c.grid, c.mean_response)
        ax.set_title(f"segment {c.segment_id}", fontsize=8)
    return _save(fig, stem)
