"""Inference on distance matrices.

Three consumers of a DistanceMatrix: a two-sample permutation test on
the mean (or median) between-group distance, classical multidimensional
scaling for visualization, and a stratified k-nearest-neighbor
classifier.  All randomness flows through numpy's PCG64 generator so
results are bit-reproducible from (inputs, seed); permutation replicates
draw from per-replicate generators seeded by (seed, replicate) and are
therefore independent of evaluation order.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .metrics import DistanceMatrix

STATISTICS = ("mean", "median")


@dataclass(frozen=True)
class PermutationResult:
    """Outcome of a two-sample permutation test."""

    observed_statistic: float
    null_statistics: tuple[float, ...]
    p_value: float
    seed: int
    statistic: str = "mean"

    @property
    def n_perm(self) -> int:
        return len(self.null_statistics)


@dataclass(frozen=True)
class Embedding:
    """Euclidean coordinates recovered from a distance matrix.

    eigenvalues holds the full descending spectrum of the double-centered
    Gram matrix.  n_clamped counts negative eigenvalues among the leading
    m that were clamped to zero; padded marks zero columns appended when
    fewer than m positive eigenvalues exist.
    """

    coordinates: np.ndarray
    eigenvalues: tuple[float, ...]
    n_clamped: int = 0
    padded: bool = False


@dataclass(frozen=True)
class KnnReport:
    """Holdout accuracy of a k-nearest-neighbor classifier."""

    accuracy: float
    per_class_recall: dict[str, float]
    test_ids: tuple[str, ...]
    true_labels: tuple[str, ...]
    predicted_labels: tuple[str, ...]
    k: int
    seed: int


def _between_mask(labels: np.ndarray, iu: tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    return labels[iu[0]] != labels[iu[1]]


def permutation_test(
    dm: DistanceMatrix, n_perm: int = 1000, seed: int = 0, statistic: str = "mean"
) -> PermutationResult:
    """Two-sample permutation test of group separation in a distance matrix.

    The observed statistic is the mean (or median) distance over pairs
    whose labels differ.  The null distribution reshuffles the label
    vector n_perm times; each replicate r uses its own generator seeded
    by (seed, r), so the null is reproducible and order-independent.
    The p-value counts ties as extreme: p = (1 + #{null >= observed})
    / (1 + n_perm).

    Raises
    ------
    ValueError
        If there are not exactly two label groups with at least two
        members each, or n_perm < 1, or the statistic name is unknown.
    """
    if statistic not in STATISTICS:
        raise ValueError(f"statistic must be one of {STATISTICS}, got {statistic!r}")
    if n_perm < 1:
        raise ValueError(f"n_perm must be at least 1, got {n_perm}")
    labels = np.asarray(dm.labels, dtype=object)
    names, counts = np.unique(labels.astype(str), return_counts=True)
    if len(names) != 2:
        raise ValueError(f"need exactly two label groups, got {list(names)}")
    small = counts < 2
    if small.any():
        raise ValueError(f"group {names[small][0]!r} has fewer than 2 members")

    n = len(labels)
    iu = np.triu_indices(n, k=1)
    pair_dists = dm.values[iu]
    stat_fn = np.mean if statistic == "mean" else np.median

    observed = float(stat_fn(pair_dists[_between_mask(labels, iu)]))
    null = np.empty(n_perm)
    for r in range(n_perm):
        rng = np.random.default_rng((seed, r))
        shuffled = labels[rng.permutation(n)]
        null[r] = stat_fn(pair_dists[_between_mask(shuffled, iu)])
    p = (1 + int(np.sum(null >= observed))) / (1 + n_perm)
    return PermutationResult(observed, tuple(float(v) for v in null), p, seed, statistic)


def write_permutation_csv(result: PermutationResult, path) -> None:
    """Write the null distribution, one replicate per row."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["replicate", "null_statistic"])
        for r, v in enumerate(result.null_statistics):
            writer.writerow([r, format(v, ".17g")])


def write_permutation_json(result: PermutationResult, path) -> None:
    """Write the summary {statistic, p_value, n_perm, seed}."""
    payload = {
        "statistic": result.observed_statistic,
        "p_value": result.p_value,
        "n_perm": result.n_perm,
        "seed": result.seed,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def classical_mds(dm: DistanceMatrix, m: int) -> Embedding:
    """Embed a distance matrix in R^m by classical (Torgerson) scaling.

    Eigendecomposes the double-centered Gram matrix -1/2 J D^2 J and
    scales the leading m eigenvectors by the square roots of their
    eigenvalues.  Negative eigenvalues among the leading m are clamped
    to zero (counted in n_clamped); if fewer than m eigenvalues are
    positive the remaining columns are zero and the result is flagged
    as padded.  Each column's sign is fixed so its largest-magnitude
    entry is positive.

    Raises
    ------
    ValueError
        If m < 1 or m exceeds the number of points.
    """
    n = len(dm.ids)
    if m < 1:
        raise ValueError(f"embedding dimension must be at least 1, got {m}")
    if m > n:
        raise ValueError(f"embedding dimension {m} exceeds point count {n}")
    d2 = dm.values**2
    j = np.eye(n) - np.full((n, n), 1.0 / n)
    b = -0.5 * j @ d2 @ j
    b = 0.5 * (b + b.T)
    eigvals, eigvecs = np.linalg.eigh(b)
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]

    n_positive = int(np.sum(eigvals > 0.0))
    coords = np.zeros((n, m))
    n_clamped = 0
    for a in range(min(m, n)):
        lam = eigvals[a]
        if lam < 0.0:
            n_clamped += 1
            continue
        col = eigvecs[:, a] * np.sqrt(lam)
        peak = np.argmax(np.abs(col))
        if col[peak] < 0.0:
            col = -col
        coords[:, a] = col
    return Embedding(
        coordinates=coords,
        eigenvalues=tuple(float(v) for v in eigvals),
        n_clamped=n_clamped,
        padded=m > n_positive,
    )


def knn_classify(dm: DistanceMatrix, k: int, holdout: float, seed: int = 0) -> KnnReport:
    """Hold out a stratified fraction of subjects and k-NN classify them.

    Within each label class the subjects are shuffled by the seeded
    generator and the first round(holdout * size) of them (at least one,
    at most size - 1) become test subjects.  Each test subject takes the
    majority label among its k nearest training subjects; vote ties are
    broken by the smaller summed distance, then lexicographically.

    Raises
    ------
    ValueError
        If holdout is not in (0, 1), k is not a positive odd integer,
        fewer than two classes exist, or k >= training-set size.
    """
    if not 0.0 < holdout < 1.0:
        raise ValueError(f"holdout fraction must be in (0, 1), got {holdout}")
    if k < 1 or k % 2 == 0:
        raise ValueError(f"k must be a positive odd integer, got {k}")
    labels = np.array([str(lab) for lab in dm.labels], dtype=object)
    classes = sorted(set(labels))
    if len(classes) < 2:
        raise ValueError("need at least two classes to classify")

    rng = np.random.default_rng(seed)
    test_idx: list[int] = []
    train_idx: list[int] = []
    for cls in classes:
        members = np.nonzero(labels == cls)[0]
        perm = members[rng.permutation(len(members))]
        n_test = int(round(holdout * len(members)))
        n_test = min(max(n_test, 1), len(members) - 1)
        test_idx.extend(int(i) for i in perm[:n_test])
        train_idx.extend(int(i) for i in perm[n_test:])
    test_idx.sort()
    train_idx.sort()
    if k >= len(train_idx):
        raise ValueError(f"k = {k} must be smaller than the training set ({len(train_idx)})")

    train = np.array(train_idx)
    predictions: list[str] = []
    for t in test_idx:
        dists = dm.values[t, train]
        order = np.argsort(dists, kind="stable")[:k]
        votes = labels[train[order]]
        tally: dict[str, int] = {}
        dist_sum: dict[str, float] = {}
        for lab, dval in zip(votes, dists[order]):
            tally[lab] = tally.get(lab, 0) + 1
            dist_sum[lab] = dist_sum.get(lab, 0.0) + float(dval)
        best = max(tally.values())
        winners = sorted(
            (lab for lab, c in tally.items() if c == best),
            key=lambda lab: (dist_sum[lab], lab),
        )
        predictions.append(winners[0])

    truth = [labels[t] for t in test_idx]
    correct = sum(p == t for p, t in zip(predictions, truth))
    recalls: dict[str, float] = {}
    for cls in classes:
        idx = [i for i, t in enumerate(truth) if t == cls]
        recalls[cls] = sum(predictions[i] == cls for i in idx) / len(idx) if idx else float("nan")
    return KnnReport(
        accuracy=correct / len(test_idx),
        per_class_recall=recalls,
        test_ids=tuple(dm.ids[t] for t in test_idx),
        true_labels=tuple(truth),
        predicted_labels=tuple(predictions),
        k=k,
        seed=seed,
    )
