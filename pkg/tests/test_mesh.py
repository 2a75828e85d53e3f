"""STL ingestion, curvature, downsampling, and landmark alignment."""

import struct

import numpy as np
import pytest

from toposhape.errors import DataError, StlParseError
from toposhape.mesh import (
    Landmarks,
    PointCloud,
    TriMesh,
    boundary_vertices,
    landmark_align,
    load_xyz,
    mean_curvature,
    parse_stl,
    stratified_downsample,
    write_stl_binary,
    write_xyz,
)
from toposhape.synthetic import icosphere

ASCII_TRIANGLE = b"""solid tri
facet normal 0 0 1
  outer loop
    vertex 0 0 0
    vertex 1 0 0
    vertex 0 1 0
  endloop
endfacet
endsolid tri
"""


def _binary_stl(triangles):
    buf = b"\0" * 80 + struct.pack("<I", len(triangles))
    for tri in triangles:
        buf += struct.pack("<3f", 0, 0, 1)
        for v in tri:
            buf += struct.pack("<3f", *v)
        buf += struct.pack("<H", 0)
    return buf


def _grid_mesh(n=8, spacing=1.0):
    """Regular planar triangulation of an n x n vertex grid."""
    verts = np.array(
        [[i * spacing, j * spacing, 0.0] for i in range(n) for j in range(n)]
    )
    faces = []
    for i in range(n - 1):
        for j in range(n - 1):
            a = i * n + j
            b = a + 1
            c = a + n
            d = c + 1
            faces.append([a, b, c])
            faces.append([b, d, c])
    return TriMesh(verts, np.asarray(faces))


def test_parse_ascii_single_triangle():
    mesh = parse_stl(ASCII_TRIANGLE)
    assert len(mesh.vertices) == 3
    assert len(mesh.faces) == 1


def test_parse_binary_welds_shared_edge():
    tris = [
        [(0, 0, 0), (1, 0, 0), (0, 1, 0)],
        [(1, 0, 0), (1, 1, 0), (0, 1, 0)],
    ]
    mesh = parse_stl(_binary_stl(tris))
    assert len(mesh.vertices) == 4
    assert len(mesh.faces) == 2


def test_truncated_binary_reports_offset():
    data = _binary_stl([[(0, 0, 0), (1, 0, 0), (0, 1, 0)]])
    truncated = data[:-30]
    header = truncated[:84].replace(struct.pack("<I", 1), struct.pack("<I", 5))
    with pytest.raises(StlParseError) as err:
        parse_stl(header + truncated[84:])
    assert err.value.offset is not None


def test_stl_binary_round_trip(tmp_path):
    mesh = _grid_mesh(4)
    path = tmp_path / "grid.stl"
    write_stl_binary(mesh, path)
    back = parse_stl(path.read_bytes())
    assert len(back.faces) == len(mesh.faces)
    assert len(back.vertices) == len(mesh.vertices)


def test_flat_grid_interior_curvature_near_zero():
    mesh = _grid_mesh(8)
    interior = np.setdiff1d(np.arange(len(mesh.vertices)), boundary_vertices(mesh))
    kappa = mean_curvature(mesh)
    assert np.abs(kappa[interior]).max() <= 1e-6


def test_unit_sphere_curvature_close_to_one():
    verts, faces = icosphere(subdivisions=4)
    mesh = TriMesh(verts, faces)
    kappa = mean_curvature(mesh, clamp=5.0)
    assert abs(np.abs(kappa).mean() - 1.0) <= 0.05


def test_curvature_clamp_applies():
    verts, faces = icosphere(subdivisions=2)
    spike = verts.copy()
    spike[0] *= 3.0  # sharp spike: unclamped curvature far above 0.5
    mesh = TriMesh(spike, faces)
    kappa = mean_curvature(mesh, clamp=0.5)
    assert np.abs(kappa).max() <= 0.5 + 1e-12


def test_curvature_rigid_equivariance():
    verts, faces = icosphere(subdivisions=3)
    mesh = TriMesh(verts, faces)
    rng = np.random.default_rng(0)
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    moved = TriMesh(verts @ q.T + np.array([3.0, -2.0, 5.0]), faces)
    assert np.abs(mean_curvature(mesh) - mean_curvature(moved)).max() <= 1e-9


def test_curvature_isolated_vertex_rejected():
    mesh = TriMesh(
        np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [9, 9, 9.0]]),
        np.array([[0, 1, 2]]),
    )
    with pytest.raises(ValueError, match="3"):
        mean_curvature(mesh)


def test_downsample_identity_when_target_covers_input():
    rng = np.random.default_rng(1)
    cloud = PointCloud(rng.random((20, 3)), rng.random(20))
    out = stratified_downsample(cloud, 50, seed=0)
    assert np.array_equal(np.sort(out.points, axis=0), np.sort(cloud.points, axis=0))


def test_downsample_deterministic_and_subset():
    rng = np.random.default_rng(2)
    cloud = PointCloud(rng.random((200, 3)), rng.random(200))
    a = stratified_downsample(cloud, 50, seed=7)
    b = stratified_downsample(cloud, 50, seed=7)
    assert np.array_equal(a.points, b.points)
    assert np.array_equal(a.values, b.values)
    rows = {tuple(p) for p in cloud.points}
    assert all(tuple(p) in rows for p in a.points)
    assert len(a.points) == 50


def test_downsample_keeps_every_occupied_stratum():
    xs, ys = np.meshgrid(np.arange(10, dtype=float), np.arange(10, dtype=float))
    pts = np.column_stack([xs.ravel(), ys.ravel(), np.zeros(100)])
    cloud = PointCloud(pts)
    out = stratified_downsample(cloud, 25, seed=3)
    g = int(np.ceil(25 ** (1.0 / 3.0) - 1e-12))
    lo = pts.min(axis=0)
    span = np.where(pts.max(axis=0) - lo > 0, pts.max(axis=0) - lo, 1.0)
    all_cells = {
        tuple(np.minimum((p - lo) / span * g, g - 1).astype(int)) for p in pts
    }
    kept_cells = {
        tuple(np.minimum((p - lo) / span * g, g - 1).astype(int)) for p in out.points
    }
    assert kept_cells == all_cells


def test_downsample_empty_cloud_rejected():
    with pytest.raises(ValueError, match="empty"):
        stratified_downsample(PointCloud(np.empty((0, 3))), 5, seed=0)


def test_landmark_align_canonical_properties():
    verts, faces = icosphere(subdivisions=3)
    mesh = TriMesh(verts * 50.0, faces)
    lm = Landmarks(nose=0, left_eye=40, right_eye=80)
    aligned = landmark_align(mesh, lm)
    eye_mid = (aligned.vertices[lm.left_eye] + aligned.vertices[lm.right_eye]) / 2
    assert np.abs(eye_mid).max() <= 1e-9
    eye_axis = aligned.vertices[lm.right_eye] - aligned.vertices[lm.left_eye]
    assert eye_axis[0] > 0
    assert np.abs(eye_axis[1:]).max() <= 1e-9
    nose = aligned.vertices[lm.nose]
    assert abs(nose[1]) <= 1e-9
    assert nose[2] > 0
    d_before = np.linalg.norm(mesh.vertices[0] - mesh.vertices[100])
    d_after = np.linalg.norm(aligned.vertices[0] - aligned.vertices[100])
    assert d_after == pytest.approx(d_before, rel=1e-9)


def test_landmark_align_idempotent():
    verts, faces = icosphere(subdivisions=3)
    mesh = TriMesh(verts * 50.0, faces)
    lm = Landmarks(nose=0, left_eye=40, right_eye=80)
    once = landmark_align(mesh, lm)
    twice = landmark_align(once, lm)
    assert np.abs(twice.vertices - once.vertices).max() <= 1e-9


def test_landmark_align_recovers_known_motion():
    verts, faces = icosphere(subdivisions=3)
    mesh = TriMesh(verts * 50.0, faces)
    lm = Landmarks(nose=0, left_eye=40, right_eye=80)
    canonical = landmark_align(mesh, lm)
    rng = np.random.default_rng(4)
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    moved = TriMesh(canonical.vertices @ q.T + np.array([10.0, -4.0, 2.0]), faces)
    recovered = landmark_align(moved, lm)
    assert np.abs(recovered.vertices - canonical.vertices).max() <= 1e-6


def test_landmark_align_collinear_rejected():
    mesh = TriMesh(
        np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0], [0, 1, 0.0]]),
        np.array([[0, 1, 3], [1, 2, 3]]),
    )
    with pytest.raises(ValueError, match="collinear"):
        landmark_align(mesh, Landmarks(nose=0, left_eye=1, right_eye=2))


def test_landmarks_validation():
    with pytest.raises(ValueError):
        Landmarks(nose=1, left_eye=1, right_eye=2)
    with pytest.raises(ValueError):
        Landmarks(nose=-1, left_eye=1, right_eye=2)


def test_trimesh_validation():
    with pytest.raises(ValueError):
        TriMesh(np.zeros((3, 3)), np.array([[0, 1, 5]]))
    with pytest.raises(ValueError):
        TriMesh(np.zeros((3, 3)), np.array([[0, 1, 1]]))


def test_xyz_round_trip_and_errors(tmp_path):
    rng = np.random.default_rng(5)
    cloud = PointCloud(rng.random((10, 3)), rng.random(10))
    path = tmp_path / "pts.xyz"
    write_xyz(cloud, path)
    back = load_xyz(path)
    assert np.allclose(back.points, cloud.points, atol=1e-15)
    assert np.allclose(back.values, cloud.values, atol=1e-15)

    bad = tmp_path / "bad.xyz"
    bad.write_text("1 2\n")
    with pytest.raises(DataError, match="line 1"):
        load_xyz(bad)
    bad.write_text("1 2 3\n1 2 x\n")
    with pytest.raises(DataError, match="line 2"):
        load_xyz(bad)
