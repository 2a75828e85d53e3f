"""Descriptor distances and distance-matrix assembly."""

import numpy as np
import pytest

from toposhape.metrics import (
    DistanceMatrix,
    hausdorff,
    l2_distance,
    pairwise_matrix,
    read_distance_csv,
    sublevel_hausdorff,
    write_distance_csv,
)
from toposhape.persistence import GridSpec, HilbertFunction

UNIT_GRID = GridSpec((0.0, 1.0), (0.0, 1.0), 4, 4)


def _hf(values, grid=UNIT_GRID, degree=0):
    return HilbertFunction(degree, grid, np.asarray(values, dtype=np.int64))


def _random_hf(rng, grid=UNIT_GRID):
    return _hf(rng.integers(0, 5, size=(grid.n_t, grid.n_tau)))


def test_l2_identical_is_zero():
    rng = np.random.default_rng(0)
    h = _random_hf(rng)
    assert l2_distance(h, h) == 0.0


def test_l2_constant_difference_on_unit_area():
    assert l2_distance(_hf(np.full((4, 4), 1)), _hf(np.full((4, 4), 3))) == pytest.approx(
        2.0, abs=1e-12
    )


def test_l2_matches_direct_summation():
    rng = np.random.default_rng(1)
    grid = GridSpec((0.0, 3.0), (-1.0, 1.0), 5, 7)
    a = _hf(rng.integers(0, 6, size=(5, 7)), grid)
    b = _hf(rng.integers(0, 6, size=(5, 7)), grid)
    cell_area = grid.dt * grid.dtau
    expected = np.sqrt(((a.values - b.values) ** 2).sum() * cell_area)
    assert l2_distance(a, b) == pytest.approx(expected, abs=1e-12)


def test_l2_grid_mismatch_names_both_grids():
    other = GridSpec((0.0, 2.0), (0.0, 1.0), 4, 4)
    with pytest.raises(ValueError, match="grid"):
        l2_distance(_hf(np.zeros((4, 4))), _hf(np.zeros((4, 4)), other))


def test_l2_metric_properties_random_grids():
    rng = np.random.default_rng(2)
    for _ in range(200):
        a, b, c = (_random_hf(rng) for _ in range(3))
        dab = l2_distance(a, b)
        dba = l2_distance(b, a)
        assert dab == dba
        assert dab >= 0.0
        assert l2_distance(a, c) <= dab + l2_distance(b, c) + 1e-12
    same = _random_hf(rng)
    assert l2_distance(same, same) == 0.0


def test_hausdorff_analytic_examples():
    a = np.array([[0.0, 0.0]])
    assert hausdorff(a, a) == 0.0
    assert hausdorff(np.array([[0.0]]), np.array([[0.0], [1.0]])) == pytest.approx(1.0)
    assert hausdorff(np.array([[0.0, 0.0]]), np.array([[3.0, 4.0]])) == pytest.approx(5.0)


def test_hausdorff_symmetry_and_subset_bound():
    rng = np.random.default_rng(3)
    for _ in range(50):
        a = rng.random((6, 2))
        b = rng.random((8, 2))
        assert hausdorff(a, b) == pytest.approx(hausdorff(b, a), abs=1e-15)
        assert hausdorff(a, np.vstack([a, b])) <= hausdorff(a, b) + 1e-12


def test_hausdorff_empty_rejected():
    with pytest.raises(ValueError):
        hausdorff(np.empty((0, 2)), np.array([[0.0, 0.0]]))


def test_sublevel_hausdorff_zero_on_identical():
    rng = np.random.default_rng(4)
    h = _random_hf(rng)
    assert sublevel_hausdorff(h, h) == 0.0


def test_sublevel_hausdorff_one_cell_shift():
    # Same pattern shifted one cell along t: every sublevel set shifts by
    # exactly one cell width.
    base = np.zeros((4, 4), dtype=np.int64)
    base[1, :] = 1
    shifted = np.zeros((4, 4), dtype=np.int64)
    shifted[2, :] = 1
    d = sublevel_hausdorff(_hf(base), _hf(shifted), thresholds=[0])
    assert d == pytest.approx(UNIT_GRID.dt, abs=1e-12)


def test_sublevel_hausdorff_sentinel_for_one_empty_side():
    h0 = _hf(np.zeros((4, 4)))
    h5 = _hf(np.full((4, 4), 5))
    diag = np.hypot(1.0, 1.0)
    assert sublevel_hausdorff(h0, h5, thresholds=[1]) == pytest.approx(diag)


def test_sublevel_hausdorff_symmetric():
    rng = np.random.default_rng(5)
    for _ in range(20):
        a, b = _random_hf(rng), _random_hf(rng)
        assert sublevel_hausdorff(a, b) == pytest.approx(sublevel_hausdorff(b, a), abs=1e-15)


def test_distance_matrix_validation():
    ids = ("a", "b")
    labels = ("no-risk", "risk")
    with pytest.raises(ValueError):
        DistanceMatrix(ids, labels, np.array([[0.0, 1.0], [2.0, 0.0]]))
    with pytest.raises(ValueError):
        DistanceMatrix(ids, labels, np.array([[0.5, 1.0], [1.0, 0.0]]))
    with pytest.raises(ValueError):
        DistanceMatrix(ids, labels, np.array([[0.0, -1.0], [-1.0, 0.0]]))
    with pytest.raises(ValueError):
        DistanceMatrix(ids, ("x",), np.zeros((2, 2)))


def test_pairwise_matrix_identical_descriptors():
    h = _hf(np.ones((4, 4)))
    dm = pairwise_matrix([h, h], l2_distance, ["a", "b"], ["risk", "no-risk"])
    assert np.array_equal(dm.values, np.zeros((2, 2)))


def test_pairwise_matrix_matches_elementwise_recompute():
    rng = np.random.default_rng(6)
    hs = [_random_hf(rng) for _ in range(3)]
    dm = pairwise_matrix(hs, l2_distance, list("abc"), ["risk", "no-risk", "risk"])
    for i in range(3):
        for j in range(3):
            assert dm.values[i, j] == pytest.approx(l2_distance(hs[i], hs[j]), abs=1e-15)


def test_pairwise_matrix_order_equivariance():
    rng = np.random.default_rng(7)
    hs = [_random_hf(rng) for _ in range(4)]
    ids = list("abcd")
    labels = ["risk", "no-risk", "risk", "no-risk"]
    dm = pairwise_matrix(hs, l2_distance, ids, labels)
    perm = [2, 0, 3, 1]
    dm2 = pairwise_matrix(
        [hs[i] for i in perm], l2_distance, [ids[i] for i in perm], [labels[i] for i in perm]
    )
    reindexed = dm.values[np.ix_(perm, perm)]
    assert np.allclose(dm2.values, reindexed, atol=1e-15)


def test_pairwise_matrix_rejects_mixed_kinds():
    h = _hf(np.ones((4, 4)))
    with pytest.raises(ValueError, match="mixed"):
        pairwise_matrix([h, np.ones(3)], l2_distance, ["a", "b"], ["risk", "no-risk"])


def test_distance_csv_round_trip_is_bit_exact(tmp_path):
    rng = np.random.default_rng(8)
    raw = rng.random((3, 3))
    vals = (raw + raw.T) / 2
    np.fill_diagonal(vals, 0.0)
    dm = DistanceMatrix(("s1", "s2", "s3"), ("no-risk", "no-risk", "risk"), vals)
    path = tmp_path / "dm.csv"
    write_distance_csv(dm, path)
    back = read_distance_csv(path)
    assert back.ids == dm.ids
    assert back.labels == dm.labels
    assert np.array_equal(back.values, dm.values)
