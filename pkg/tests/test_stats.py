"""Permutation test, classical MDS, and k-NN holdout classification."""

import itertools
import json

import numpy as np
import pytest

from toposhape.metrics import DistanceMatrix
from toposhape.stats import (
    classical_mds,
    knn_classify,
    permutation_test,
    write_permutation_csv,
    write_permutation_json,
)


def _dm(values, labels, ids=None):
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    if ids is None:
        ids = tuple(f"s{i:02d}" for i in range(n))
    return DistanceMatrix(ids=tuple(ids), labels=tuple(labels), values=values)


def _planted(n_per_group, within=0.1, between=5.0, jitter=0.0, seed=0):
    n = 2 * n_per_group
    rng = np.random.default_rng(seed)
    values = np.full((n, n), between)
    values[:n_per_group, :n_per_group] = within
    values[n_per_group:, n_per_group:] = within
    if jitter:
        noise = rng.random((n, n)) * jitter
        values = values + np.triu(noise, 1) + np.triu(noise, 1).T
    np.fill_diagonal(values, 0.0)
    labels = ("g1",) * n_per_group + ("g2",) * n_per_group
    return _dm(values, labels)


def test_permutation_all_equal_distances_p_is_one():
    n = 8
    values = np.ones((n, n)) - np.eye(n)
    dm = _dm(values, ("a",) * 4 + ("b",) * 4)
    result = permutation_test(dm, n_perm=199, seed=3)
    assert result.p_value == 1.0


def test_permutation_planted_clusters_minimum_p():
    dm = _planted(10, jitter=0.01, seed=1)
    result = permutation_test(dm, n_perm=999, seed=0)
    assert result.p_value == pytest.approx(1.0 / 1000.0)
    assert result.observed_statistic > max(result.null_statistics)


def test_permutation_matches_exhaustive_enumeration():
    # On 6 subjects every relabeling can be enumerated, giving the exact
    # tail probability the sampled null must approach.
    rng = np.random.default_rng(4)
    values = np.triu(rng.random((6, 6)), 1)
    values = values + values.T
    labels = ("a", "a", "a", "b", "b", "b")
    dm = _dm(values, labels)

    iu = np.triu_indices(6, k=1)
    pair = values[iu]
    lab = np.asarray(labels, dtype=object)

    def stat(perm):
        shuffled = lab[list(perm)]
        mask = shuffled[iu[0]] != shuffled[iu[1]]
        return pair[mask].mean()

    observed = stat(range(6))
    exact_tail = np.mean(
        [stat(perm) >= observed for perm in itertools.permutations(range(6))]
    )

    n_perm = 4999
    result = permutation_test(dm, n_perm=n_perm, seed=0)
    assert result.observed_statistic == pytest.approx(observed, abs=1e-12)
    sigma = np.sqrt(exact_tail * (1 - exact_tail) / n_perm)
    expected = (1 + n_perm * exact_tail) / (1 + n_perm)
    assert abs(result.p_value - expected) <= 4 * sigma + 1e-12


def test_permutation_invariant_to_label_names_and_swap():
    dm = _planted(5, jitter=0.2, seed=2)
    renamed = _dm(dm.values, tuple("zz" if lab == "g1" else "aa" for lab in dm.labels))
    r1 = permutation_test(dm, n_perm=99, seed=7)
    r2 = permutation_test(renamed, n_perm=99, seed=7)
    assert r1.p_value == r2.p_value
    assert r1.null_statistics == r2.null_statistics


def test_permutation_seeded_reproducibility():
    dm = _planted(6, jitter=1.0, seed=3)
    r1 = permutation_test(dm, n_perm=200, seed=11)
    r2 = permutation_test(dm, n_perm=200, seed=11)
    r3 = permutation_test(dm, n_perm=200, seed=12)
    assert r1 == r2
    assert r1.null_statistics != r3.null_statistics


def test_permutation_median_statistic():
    dm = _planted(4, jitter=2.0, seed=5)
    result = permutation_test(dm, n_perm=49, seed=0, statistic="median")
    iu = np.triu_indices(dm.n, k=1)
    lab = np.asarray(dm.labels, dtype=object)
    between = dm.values[iu][lab[iu[0]] != lab[iu[1]]]
    assert result.statistic == "median"
    assert result.observed_statistic == np.median(between)


def test_permutation_validation():
    values = np.ones((4, 4)) - np.eye(4)
    with pytest.raises(ValueError, match="two label groups"):
        permutation_test(_dm(values, ("a", "a", "b", "c")))
    with pytest.raises(ValueError, match="fewer than 2"):
        permutation_test(_dm(values, ("a", "a", "a", "b")))
    dm = _dm(values, ("a", "a", "b", "b"))
    with pytest.raises(ValueError, match="n_perm"):
        permutation_test(dm, n_perm=0)
    with pytest.raises(ValueError, match="statistic"):
        permutation_test(dm, statistic="mode")


def test_mds_equilateral_triangle():
    side = 2.0
    values = side * (np.ones((3, 3)) - np.eye(3))
    dm = _dm(values, ("a", "a", "b"))
    emb = classical_mds(dm, 2)
    recovered = np.linalg.norm(
        emb.coordinates[:, None, :] - emb.coordinates[None, :, :], axis=2
    )
    assert np.abs(recovered - values).max() <= 1e-9
    assert emb.n_clamped == 0


def test_mds_collinear_points():
    xs = np.array([0.0, 1.0, 3.0, 7.0])
    values = np.abs(xs[:, None] - xs[None, :])
    dm = _dm(values, ("a", "a", "b", "b"))
    emb = classical_mds(dm, 2)
    recovered = np.linalg.norm(
        emb.coordinates[:, None, :] - emb.coordinates[None, :, :], axis=2
    )
    assert np.abs(recovered - values).max() <= 1e-9
    # All the geometry lives in the first coordinate; the second carries
    # only the square root of a noise-level eigenvalue.
    assert np.abs(emb.coordinates[:, 1]).max() <= 1e-6


def test_mds_recovers_random_spatial_configuration():
    rng = np.random.default_rng(6)
    pts = rng.random((10, 3)) * 4
    values = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
    dm = _dm(values, ("a",) * 5 + ("b",) * 5)
    emb = classical_mds(dm, 3)
    recovered = np.linalg.norm(
        emb.coordinates[:, None, :] - emb.coordinates[None, :, :], axis=2
    )
    assert np.abs(recovered - values).max() <= 1e-6
    assert emb.padded is False


def test_mds_clamps_negative_eigenvalues():
    # 2.5 > 1 + 1 breaks the triangle inequality, forcing a negative
    # eigenvalue into the leading block.
    values = np.array(
        [
            [0.0, 1.0, 1.0, 2.5],
            [1.0, 0.0, 1.0, 1.0],
            [1.0, 1.0, 0.0, 1.0],
            [2.5, 1.0, 1.0, 0.0],
        ]
    )
    dm = _dm(values, ("a", "a", "b", "b"))
    emb = classical_mds(dm, 4)
    assert emb.n_clamped >= 1
    assert emb.padded is True
    assert min(emb.eigenvalues) < 0


def test_mds_pads_when_rank_deficient():
    values = np.zeros((3, 3))
    dm = _dm(values, ("a", "a", "b"))
    emb = classical_mds(dm, 2)
    assert emb.padded is True
    assert np.all(emb.coordinates == 0.0)


def test_mds_sign_convention_and_validation():
    xs = np.array([0.0, 1.0, 3.0])
    values = np.abs(xs[:, None] - xs[None, :])
    dm = _dm(values, ("a", "a", "b"))
    emb = classical_mds(dm, 1)
    col = emb.coordinates[:, 0]
    assert col[np.argmax(np.abs(col))] > 0
    with pytest.raises(ValueError, match="at least 1"):
        classical_mds(dm, 0)
    with pytest.raises(ValueError, match="exceeds"):
        classical_mds(dm, 4)


def test_knn_planted_clusters_perfect_accuracy():
    dm = _planted(8, jitter=0.05, seed=7)
    report = knn_classify(dm, k=3, holdout=0.25, seed=1)
    assert report.accuracy == 1.0
    assert set(report.per_class_recall) == {"g1", "g2"}
    assert all(v == 1.0 for v in report.per_class_recall.values())
    assert report.k == 3


def test_knn_random_distances_near_chance():
    accs = []
    for seed in range(20):
        rng = np.random.default_rng(1000 + seed)
        values = np.triu(rng.random((16, 16)) + 0.1, 1)
        values = values + values.T
        dm = _dm(values, ("a", "b") * 8)
        accs.append(knn_classify(dm, k=3, holdout=0.25, seed=seed).accuracy)
    assert 0.35 <= np.mean(accs) <= 0.65


def test_knn_zero_distance_inherits_label():
    # Each class has two interchangeable members at distance zero, so
    # whichever member is held out, its nearest neighbor is its twin.
    n = 6
    values = np.full((n, n), 4.0)
    labels = ("a", "a", "b", "b", "c", "c")
    for i in range(0, n, 2):
        values[i, i + 1] = values[i + 1, i] = 0.0
    np.fill_diagonal(values, 0.0)
    dm = _dm(values, labels)
    for seed in range(5):
        report = knn_classify(dm, k=1, holdout=0.5, seed=seed)
        assert report.accuracy == 1.0
        assert len(report.test_ids) == 3


def test_knn_report_bookkeeping():
    dm = _planted(4, jitter=0.01, seed=8)
    report = knn_classify(dm, k=1, holdout=0.25, seed=3)
    assert len(report.test_ids) == len(report.true_labels) == len(report.predicted_labels)
    assert set(report.test_ids) <= set(dm.ids)
    assert report.seed == 3


def test_knn_validation():
    dm = _planted(2)
    with pytest.raises(ValueError, match="odd"):
        knn_classify(dm, k=2, holdout=0.25)
    with pytest.raises(ValueError, match="odd"):
        knn_classify(dm, k=0, holdout=0.25)
    with pytest.raises(ValueError, match="holdout"):
        knn_classify(dm, k=1, holdout=0.0)
    with pytest.raises(ValueError, match="holdout"):
        knn_classify(dm, k=1, holdout=1.0)
    with pytest.raises(ValueError, match="training set"):
        knn_classify(dm, k=3, holdout=0.5)
    single = _dm(np.zeros((3, 3)), ("a", "a", "a"))
    with pytest.raises(ValueError, match="two classes"):
        knn_classify(single, k=1, holdout=0.34)


def test_permutation_csv_writer(tmp_path):
    dm = _planted(3, jitter=0.5, seed=9)
    result = permutation_test(dm, n_perm=25, seed=2)
    path = tmp_path / "perm.csv"
    write_permutation_csv(result, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "replicate,null_statistic"
    assert len(lines) == 26
    values = [float(line.split(",")[1]) for line in lines[1:]]
    assert values == list(result.null_statistics)


def test_permutation_json_writer(tmp_path):
    dm = _planted(3, jitter=0.5, seed=10)
    result = permutation_test(dm, n_perm=49, seed=5)
    path = tmp_path / "perm.json"
    write_permutation_json(result, path)
    text = path.read_text()
    assert text.endswith("\n")
    payload = json.loads(text)
    assert payload == {
        "statistic": result.observed_statistic,
        "p_value": result.p_value,
        "n_perm": 49,
        "seed": 5,
    }
