"""Distances between descriptors and the labeled distance-matrix container.

Two Hilbert-function metrics are provided: an L2 metric integrating the
squared cell difference over the grid rectangle, and a sublevel-set
Hausdorff metric taking the worst Hausdorff distance between sublevel
cell-center sets across a ladder of thresholds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .persistence import HilbertFunction


def _require_same_grid(a: HilbertFunction, b: HilbertFunction) -> None:
    if a.grid != b.grid:
        raise ValueError(f"grid mismatch: {a.grid} vs {b.grid}")
    if a.degree != b.degree:
        raise ValueError(f"degree mismatch: {a.degree} vs {b.degree}")


def l2_distance(a: HilbertFunction, b: HilbertFunction) -> float:
    """L2 distance between two Hilbert functions on an identical grid.

    The integrand is piecewise constant per cell, so the midpoint rule is
    exact: sqrt(sum over cells of (difference^2 * cell area)).
    """
    _require_same_grid(a, b)
    diff = a.values.astype(float) - b.values.astype(float)
    return float(np.sqrt(np.sum(diff * diff) * a.grid.cell_area))


def hausdorff(points_a: np.ndarray, points_b: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two finite point sets.

    Raises
    ------
    ValueError
        If either set is empty.
    """
    a = np.atleast_2d(np.asarray(points_a, dtype=float))
    b = np.atleast_2d(np.asarray(points_b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("hausdorff distance needs nonempty sets")
    d = cdist(a, b)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def _cell_centers(hf: HilbertFunction) -> np.ndarray:
    g = hf.grid
    t_centers = g.t_grades + 0.5 * g.dt
    tau_centers = g.tau_grades + 0.5 * g.dtau
    tt, uu = np.meshgrid(t_centers, tau_centers, indexing="ij")
    return np.column_stack([tt.ravel(), uu.ravel()])


def sublevel_hausdorff(a: HilbertFunction, b: HilbertFunction, thresholds=None) -> float:
    """Worst-case Hausdorff distance between sublevel sets of two Hilbert functions.

    For each threshold, the sublevel set is the set of cell centers whose
    value is <= the threshold.  If exactly one of the two sets is empty
    the grid rectangle's diagonal length stands in as the distance; if
    both are empty the threshold contributes zero.  Default thresholds
    are the integers 0..max value of either function.
    """
    _require_same_grid(a, b)
    if thresholds is None:
        top = int(max(a.values.max(initial=0), b.values.max(initial=0)))
        thresholds = np.arange(top + 1)
    centers = _cell_centers(a)
    flat_a = a.values.ravel()
    flat_b = b.values.ravel()
    worst = 0.0
    for lam in np.asarray(thresholds, dtype=float):
        set_a = centers[flat_a <= lam]
        set_b = centers[flat_b <= lam]
        if len(set_a) == 0 and len(set_b) == 0:
            continue
        if len(set_a) == 0 or len(set_b) == 0:
            worst = max(worst, a.grid.diagonal)
            continue
        worst = max(worst, hausdorff(set_a, set_b))
    return worst


@dataclass(frozen=True)
class DistanceMatrix:
    """A symmetric labeled distance matrix over named subjects."""

    ids: tuple[str, ...]
    labels: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        n = len(self.ids)
        if len(self.labels) != n:
            raise ValueError("one label per id required")
        if vals.shape != (n, n):
            raise ValueError(f"matrix must be ({n}, {n}), got {vals.shape}")
        if not np.isfinite(vals).all():
            raise ValueError("distances must be finite")
        if (vals < 0).any():
            raise ValueError("distances must be non-negative")
        if not np.array_equal(vals, vals.T):
            raise ValueError("matrix must be symmetric")
        if np.any(np.diag(vals) != 0.0):
            raise ValueError("diagonal must be zero")
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return len(self.ids)


def pairwise_matrix(
    descriptors: Sequence,
    metric: Callable,
    ids: Sequence[str],
    labels: Sequence[str],
) -> DistanceMatrix:
    """Assemble a DistanceMatrix by evaluating a metric on descriptor pairs.

    Each unordered pair is evaluated once, which makes the result exactly
    symmetric.  All descriptors must share a type.

    Raises
    ------
    ValueError
        If fewer than 2 descriptors are given, descriptor kinds are mixed,
        or id/label counts disagree.
    """
    n = len(descriptors)
    if n < 2:
        raise ValueError("need at least 2 descriptors")
    if len(ids) != n or len(labels) != n:
        raise ValueError("ids and labels must match descriptor count")
    kinds = {type(d) for d in descriptors}
    if len(kinds) > 1:
        raise ValueError(f"mixed descriptor kinds: {sorted(k.__name__ for k in kinds)}")
    values = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d = float(metric(descriptors[i], descriptors[j]))
            values[i, j] = d
            values[j, i] = d
    return DistanceMatrix(tuple(ids), tuple(labels), values)


def write_distance_csv(dm: DistanceMatrix, path) -> None:
    """Write a distance matrix with an id header row and a label row.

    Floats are written with 17 significant digits so a read-back
    round-trips bit-exactly.
    """
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("id," + ",".join(dm.ids) + "\n")
        fh.write("label," + ",".join(dm.labels) + "\n")
        for i, sid in enumerate(dm.ids):
            fh.write(sid + "," + ",".join(f"{v:.17g}" for v in dm.values[i]) + "\n")


def read_distance_csv(path) -> DistanceMatrix:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if header[0] != "id":
            raise ValueError(f"{path}: expected id header row")
        ids = tuple(header[1:])
        label_row = fh.readline().strip().split(",")
        if label_row[0] != "label":
            raise ValueError(f"{path}: expected label row")
        labels = tuple(label_row[1:])
        rows = [line.strip().split(",") for line in fh if line.strip()]
    if len(rows) != len(ids):
        raise ValueError(f"{path}: expected {len(ids)} matrix rows, got {len(rows)}")
    values = np.zeros((len(ids), len(ids)))
    for i, row in enumerate(rows):
        if row[0] != ids[i]:
            raise ValueError(f"{path}: row id {row[0]!r} does not match header {ids[i]!r}")
        values[i] = [float(x) for x in row[1:]]
    return DistanceMatrix(ids, labels, values)
