"""Level-curve extraction, resampling, and curve CSV I/O."""

import numpy as np
import pytest

from toposhape.contours import (
    FacialCurves,
    default_levels,
    extract_level_curves,
    read_curves_csv,
    resample_curve,
    write_curves_csv,
    write_geodesic_csv,
)
from toposhape.mesh import TriMesh
from toposhape.shape import Curve
from toposhape.synthetic import icosphere


def _sphere_mesh(subdivisions=3):
    verts, faces = icosphere(subdivisions)
    return TriMesh(verts, faces)


def _torus_mesh(big_r=2.0, small_r=0.5, n_u=48, n_v=24):
    us = np.linspace(0, 2 * np.pi, n_u, endpoint=False)
    vs = np.linspace(0, 2 * np.pi, n_v, endpoint=False)
    verts = []
    for u in us:
        for v in vs:
            verts.append(
                [
                    (big_r + small_r * np.cos(v)) * np.cos(u),
                    (big_r + small_r * np.cos(v)) * np.sin(u),
                    small_r * np.sin(v),
                ]
            )
    faces = []
    for i in range(n_u):
        for j in range(n_v):
            a = i * n_v + j
            b = i * n_v + (j + 1) % n_v
            c = ((i + 1) % n_u) * n_v + j
            d = ((i + 1) % n_u) * n_v + (j + 1) % n_v
            faces.append([a, b, c])
            faces.append([b, d, c])
    return TriMesh(np.asarray(verts), np.asarray(faces))


def _spacings(curve):
    pts = curve.points
    if curve.kind == "closed":
        pts = np.vstack([pts, pts[:1]])
    return np.linalg.norm(np.diff(pts, axis=0), axis=1)


def test_sphere_equator_is_one_closed_circle():
    mesh = _sphere_mesh()
    field = mesh.vertices[:, 2]
    fc = extract_level_curves(mesh, field, [0.0])
    assert len(fc) == 1
    curve = fc.curves[0]
    assert curve.kind == "closed"
    radii = np.linalg.norm(curve.points[:, :2], axis=1)
    edge_lengths = np.linalg.norm(
        mesh.vertices[mesh.faces[:, 0]] - mesh.vertices[mesh.faces[:, 1]], axis=1
    )
    assert np.abs(radii - 1.0).max() <= 2 * edge_lengths.mean()


def test_level_outside_field_range_rejected():
    mesh = _sphere_mesh()
    field = mesh.vertices[:, 2]
    with pytest.raises(ValueError, match="2"):
        extract_level_curves(mesh, field, [float(field.max()) + 1.0])


def test_torus_keeps_longer_component():
    mesh = _torus_mesh()
    field = mesh.vertices[:, 2]
    fc = extract_level_curves(mesh, field, [0.0])
    curve = fc.curves[0]
    radii = np.linalg.norm(curve.points[:, :2], axis=1)
    # The z=0 slice has circles of radius 1.5 and 2.5; the longer (outer)
    # one must be the survivor.
    assert np.abs(radii - 2.5).max() <= 0.1


def test_emitted_points_interpolate_field_to_level():
    mesh = _sphere_mesh()
    field = mesh.vertices[:, 2] * 0.7 + 0.1
    level = 0.25
    fc = extract_level_curves(mesh, field, [level])
    recovered = fc.curves[0].points[:, 2] * 0.7 + 0.1
    assert np.abs(recovered - level).max() <= 1e-9


def test_levels_strictly_increasing_required():
    with pytest.raises(ValueError):
        FacialCurves(
            (Curve(np.eye(3)), Curve(np.eye(3)[::-1])),
            (1.0, 1.0),
        )


def test_default_levels_within_percentiles():
    rng = np.random.default_rng(0)
    field = rng.standard_normal(500)
    levels = default_levels(field, k=10)
    lo, hi = np.percentile(field, [5, 95])
    assert len(levels) == 10
    assert levels[0] == pytest.approx(lo)
    assert levels[-1] == pytest.approx(hi)
    assert (np.diff(levels) > 0).all()


def test_resample_open_segment_equal_spacing():
    curve = Curve(np.array([[0.0, 0.0, 0.0], [0.3, 0.0, 0.0], [2.0, 0.0, 0.0]]))
    out = resample_curve(curve, 5)
    assert out.n_points == 5
    assert np.allclose(_spacings(out), 0.5, rtol=1e-6)
    assert np.allclose(out.points[0], curve.points[0], atol=1e-12)
    assert np.allclose(out.points[-1], curve.points[-1], atol=1e-12)


def test_resample_equidistant_circle_idempotent():
    m = 64
    theta = np.linspace(0, 2 * np.pi, m, endpoint=False)
    circle = Curve(np.column_stack([np.cos(theta), np.sin(theta)]), kind="closed")
    out = resample_curve(circle, m)
    assert np.abs(out.points - circle.points).max() <= 1e-6


def test_resample_unevenly_sampled_circle():
    # Sampling density varies about 10:1 around the circle.
    u = np.linspace(0, 1, 80, endpoint=False)
    theta = 2 * np.pi * (u + 0.13 * np.sin(2 * np.pi * u))
    assert (np.diff(theta) > 0).all()
    circle = Curve(np.column_stack([np.cos(theta), np.sin(theta)]), kind="closed")
    out = resample_curve(circle, 64)
    sp = _spacings(out)
    assert sp.var() / sp.mean() ** 2 < 1e-10
    radii = np.linalg.norm(out.points, axis=1)
    assert np.abs(radii - 1.0).max() < 1e-3


def test_resample_circle_length_matches_inscribed_polygon():
    # Upsampling 48 circle samples to an equally spaced 200-gon should
    # reproduce the exact inscribed-polygon perimeter.
    theta = np.linspace(0, 2 * np.pi, 48, endpoint=False)
    circle = Curve(np.column_stack([np.cos(theta), np.sin(theta)]), kind="closed")
    after = _spacings(resample_curve(circle, 200)).sum()
    expected = 200 * 2 * np.sin(np.pi / 200)
    assert abs(after - expected) <= 1e-5


def test_resample_wiggly_length_stable():
    theta = np.linspace(0, 2 * np.pi, 48, endpoint=False)
    wiggly = np.column_stack(
        [np.cos(theta) * (1 + 0.1 * np.sin(3 * theta)), np.sin(theta), 0.05 * np.cos(5 * theta)]
    )
    curve = Curve(wiggly, kind="closed")
    before = _spacings(curve).sum()
    after = _spacings(resample_curve(curve, 200)).sum()
    assert abs(after - before) / before <= 5e-3


def test_resample_degenerate_curve_rejected():
    with pytest.raises(ValueError):
        resample_curve(Curve(np.zeros((4, 3)) + 1.0), 8)


def test_curves_csv_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    curves = [Curve(rng.random((6, 3))), Curve(rng.random((5, 3)))]
    path = tmp_path / "curves.csv"
    write_curves_csv(curves, path)
    back = read_curves_csv(path)
    assert len(back) == 2
    for orig, rt in zip(curves, back):
        assert np.allclose(rt.points, orig.points, atol=1e-15)


def test_curves_csv_pads_2d_with_zero_z(tmp_path):
    curve = Curve(np.array([[0.0, 1.0], [1.0, 1.5], [2.0, 0.5]]))
    path = tmp_path / "c.csv"
    write_curves_csv([curve], path)
    back = read_curves_csv(path)
    assert back[0].points.shape == (3, 3)
    assert np.allclose(back[0].points[:, 2], 0.0)


def test_curves_csv_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x,y,z\n")
    with pytest.raises(ValueError, match="header"):
        read_curves_csv(path)


def test_geodesic_csv_has_step_column(tmp_path):
    rng = np.random.default_rng(3)
    steps = [Curve(rng.random((4, 3))), Curve(rng.random((4, 3)))]
    path = tmp_path / "geo.csv"
    write_geodesic_csv(steps, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "step,curve_index,point_index,x,y,z"
    assert len(lines) == 1 + 2 * 4
    assert lines[1].startswith("0,0,0,")
    assert lines[5].startswith("1,0,0,")
