"""Deterministic SVG figures for barcodes, Hilbert grids, and matrices.

Figures are built directly (no pyplot state) and saved as SVG with a
fixed hash salt and no date metadata, so identical inputs give byte
identical files.  Grid cells and bars carry SVG gid attributes, which
lets tests assert on the rendered geometry without rasterizing.
"""

from __future__ import annotations

from typing import Sequence

import matplotlib
import numpy as np
from matplotlib.figure import Figure
from matplotlib.patches import FancyArrow, Rectangle

from .metrics import DistanceMatrix
from .persistence import Barcode, HilbertFunction

SVG_RC = {"svg.hashsalt": "toposhape", "svg.fonttype": "path"}
SEPARATOR_COLOR = "#90ee90"
GROUP_COLORS = ("#1f77b4", "#d62728")


def _save(fig: Figure, path) -> None:
    with matplotlib.rc_context(SVG_RC):
        fig.savefig(path, format="svg", metadata={"Date": None})


def _shade(value: float, vmax: float) -> tuple[float, float, float]:
    """Grayscale fill, darker for larger values."""
    if vmax <= 0:
        return (1.0, 1.0, 1.0)
    g = 1.0 - 0.9 * min(max(value / vmax, 0.0), 1.0)
    return (g, g, g)


def plot_barcode(barcodes: Barcode | Sequence[Barcode], path, t_max: float | None = None) -> None:
    """Render barcodes as horizontal interval stacks, one band per degree.

    Intervals with infinite death extend to the right edge and end in an
    arrowhead.  An empty barcode still produces axes, annotated with
    "no intervals".
    """
    if isinstance(barcodes, Barcode):
        barcodes = [barcodes]
    fig = Figure(figsize=(6.4, 4.8))
    ax = fig.add_subplot()

    finite = [
        v
        for bc in barcodes
        for iv in bc.intervals
        for v in iv
        if np.isfinite(v)
    ]
    if t_max is None:
        t_max = max(finite) * 1.1 if finite else 1.0
    if t_max <= 0:
        t_max = 1.0

    colors = {0: "#1f77b4", 1: "#d62728", 2: "#2ca02c"}
    y = 0
    yticks, ylabels = [], []
    total = 0
    for bc in sorted(barcodes, key=lambda b: b.degree):
        y_start = y
        for i, (birth, death) in enumerate(bc.intervals):
            end = t_max if np.isinf(death) else death
            bar = Rectangle(
                (birth, y + 0.2), max(end - birth, 0.0), 0.6,
                facecolor=colors.get(bc.degree, "#555555"), edgecolor="none",
            )
            bar.set_gid(f"bar-{bc.degree}-{i}")
            ax.add_patch(bar)
            if np.isinf(death):
                arrow = FancyArrow(
                    end, y + 0.5, 0.02 * t_max, 0.0,
                    width=0.3, head_width=0.8, head_length=0.02 * t_max,
                    length_includes_head=True,
                    facecolor=colors.get(bc.degree, "#555555"), edgecolor="none",
                )
                arrow.set_gid(f"arrow-{bc.degree}-{i}")
                ax.add_patch(arrow)
            y += 1
            total += 1
        if y > y_start:
            yticks.append((y_start + y - 1) / 2)
            ylabels.append(f"degree {bc.degree}")
        y += 1
    if total == 0:
        ax.annotate("no intervals", (0.5, 0.5), xycoords="axes fraction", ha="center")
    ax.set_xlim(0.0, t_max * 1.05)
    ax.set_ylim(-0.5, max(y, 1))
    ax.set_yticks(yticks)
    ax.set_yticklabels(ylabels)
    ax.set_xlabel("scale t")
    ax.set_title("persistence barcode")
    _save(fig, path)


def plot_hilbert_heatmap(hf: HilbertFunction, path) -> None:
    """Render a Hilbert function as a grayscale grid, darker = larger."""
    grid = hf.grid
    vals = hf.values
    fig = Figure(figsize=(6.4, 4.8))
    ax = fig.add_subplot()
    vmax = float(vals.max())
    for i, t in enumerate(grid.t_grades):
        for j, tau in enumerate(grid.tau_grades):
            cell = Rectangle(
                (t, tau), grid.dt, grid.dtau,
                facecolor=_shade(float(vals[i, j]), vmax), edgecolor="#cccccc",
                linewidth=0.3,
            )
            cell.set_gid(f"cell-{i}-{j}")
            ax.add_patch(cell)
    ax.set_xlim(grid.t_range[0], grid.t_range[1])
    ax.set_ylim(grid.tau_range[0], grid.tau_range[1])
    ax.set_xlabel("scale t")
    ax.set_ylabel("value threshold")
    ax.set_title(f"dimension function, degree {hf.degree}")
    _save(fig, path)


def plot_distance_heatmap(dm: DistanceMatrix, path) -> None:
    """Render a distance matrix with light-green group separator lines.

    Rows and columns follow the matrix order; separators are drawn at
    every index where the label changes.
    """
    n = len(dm.ids)
    vals = dm.values
    vmax = float(vals.max())
    fig = Figure(figsize=(6.4, 5.6))
    ax = fig.add_subplot()
    for i in range(n):
        for j in range(n):
            cell = Rectangle(
                (j, n - 1 - i), 1.0, 1.0,
                facecolor=_shade(float(vals[i, j]), vmax), edgecolor="none",
            )
            cell.set_gid(f"dcell-{i}-{j}")
            ax.add_patch(cell)
    boundaries = [
        k + 1 for k in range(n - 1) if dm.labels[k] != dm.labels[k + 1]
    ]
    for b, k in enumerate(boundaries):
        ax.plot([0, n], [n - k, n - k], color=SEPARATOR_COLOR, linewidth=2.5, gid=f"separator-h-{b}")
        ax.plot([k, k], [0, n], color=SEPARATOR_COLOR, linewidth=2.5, gid=f"separator-v-{b}")
    ax.set_xlim(0, n)
    ax.set_ylim(0, n)
    ax.set_xticks(np.arange(n) + 0.5)
    ax.set_xticklabels(dm.ids, rotation=90, fontsize=6)
    ax.set_yticks(np.arange(n) + 0.5)
    ax.set_yticklabels(list(reversed(dm.ids)), fontsize=6)
    ax.set_title("pairwise distances")
    _save(fig, path)


def plot_mds_scatter(
    coordinates: np.ndarray, labels: Sequence[str], ids: Sequence[str], path
) -> None:
    """Scatter the first two embedding coordinates, one color per label."""
    coords = np.asarray(coordinates, dtype=float)
    if coords.shape[1] < 2:
        coords = np.column_stack([coords, np.zeros(len(coords))])
    fig = Figure(figsize=(6.4, 4.8))
    ax = fig.add_subplot()
    groups = sorted(set(labels))
    for gi, group in enumerate(groups):
        idx = [i for i, lab in enumerate(labels) if lab == group]
        ax.scatter(
            coords[idx, 0], coords[idx, 1],
            c=GROUP_COLORS[gi % len(GROUP_COLORS)], label=str(group),
            gid=f"group-{group}", s=36,
        )
    ax.legend(loc="best")
    ax.set_xlabel("coordinate 1")
    ax.set_ylabel("coordinate 2")
    ax.set_title("multidimensional scaling")
    _save(fig, path)
