"""Synthetic stand-ins for clinical face scans.

Real scan data is private, so end-to-end behavior is exercised on
generated datasets: face-like spherical caps (a nose bump and two eye
dents on an icosphere, millimeter scale) and flat four-leaf clover
point clouds whose loops are visible to degree-1 persistence.  Each
dataset contains two label groups separated by a controlled geometric
offset: a stronger nose, an ellipsoidal head, or interior fill inside
two clover leaves.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist

from .mesh import Landmarks, PointCloud, TriMesh, parse_stl, write_stl_binary, write_xyz

FAMILIES = ("sphere-bump", "ellipsoid-bump", "clover-cloud")

FACE_RADIUS_MM = 50.0
CAP_ANGLE_RAD = np.deg2rad(70.0)

# Unit directions of the landmark features on the unbumped sphere.
_NOSE_DIR = np.array([0.0, -0.36, 1.0])
_LEFT_EYE_DIR = np.array([-0.34, 0.40, 1.0])
_RIGHT_EYE_DIR = np.array([0.34, 0.40, 1.0])

_ELLIPSOID_AXES = np.array([1.22, 0.94, 0.86])
_NOSE_AMP, _NOSE_WIDTH = 0.16, 0.20
_EYE_AMP, _EYE_WIDTH = 0.05, 0.14
_RISK_NOSE_FACTOR = 1.5

CLOVER_FILL_PER_LEAF = 5
CODENSITY_NEIGHBOR = 10


def icosphere(subdivisions: int = 3) -> tuple[np.ndarray, np.ndarray]:
    """Unit-sphere triangulation by recursive icosahedron subdivision.

    Returns (vertices, faces); subdivision level s gives 20 * 4^s faces.
    """
    if subdivisions < 0:
        raise ValueError("subdivisions must be non-negative")
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=float,
    )
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    vlist = [tuple(v) for v in verts]
    for _ in range(subdivisions):
        cache: dict[tuple[int, int], int] = {}

        def midpoint(a: int, b: int) -> int:
            key = (a, b) if a < b else (b, a)
            idx = cache.get(key)
            if idx is None:
                mid = np.asarray(vlist[a]) + np.asarray(vlist[b])
                mid /= np.linalg.norm(mid)
                vlist.append(tuple(mid))
                idx = len(vlist) - 1
                cache[key] = idx
            return idx

        next_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            next_faces.extend([(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)])
        faces = next_faces
    return np.array(vlist), np.array(faces, dtype=np.int64)


def _bump_profile(dirs: np.ndarray, center: np.ndarray, width: float) -> np.ndarray:
    center = center / np.linalg.norm(center)
    ang = np.arccos(np.clip(dirs @ center, -1.0, 1.0))
    return np.exp(-((ang / width) ** 2))


def make_face_mesh(
    nose_amp: float = _NOSE_AMP,
    eye_amp: float = _EYE_AMP,
    axes: np.ndarray | None = None,
    radial_noise: float = 0.0,
    rng: np.random.Generator | None = None,
    subdivisions: int = 3,
) -> tuple[TriMesh, dict[str, np.ndarray]]:
    """A face-like spherical cap with a nose bump and two eye dents.

    Returns the mesh (millimeter scale) and the exact 3D positions of
    the nose and eye features, for landmark lookup after file round
    trips.  axes, if given, scales the result into an ellipsoid.
    """
    verts, faces = icosphere(subdivisions)
    keep_mask = verts[:, 2] >= np.cos(CAP_ANGLE_RAD)
    face_keep = keep_mask[faces].all(axis=1)
    faces = faces[face_keep]
    used = np.unique(faces)
    remap = np.full(len(verts), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    verts = verts[used]
    faces = remap[faces]

    def radial_scale(dirs: np.ndarray) -> np.ndarray:
        scale = np.ones(len(dirs))
        scale += nose_amp * _bump_profile(dirs, _NOSE_DIR, _NOSE_WIDTH)
        scale -= eye_amp * _bump_profile(dirs, _LEFT_EYE_DIR, _EYE_WIDTH)
        scale -= eye_amp * _bump_profile(dirs, _RIGHT_EYE_DIR, _EYE_WIDTH)
        return scale

    points = verts * (FACE_RADIUS_MM * radial_scale(verts))[:, None]
    if radial_noise > 0.0 and rng is not None:
        points += verts * rng.normal(0.0, radial_noise, size=(len(verts), 1))

    landmark_dirs = {
        "nose": _NOSE_DIR / np.linalg.norm(_NOSE_DIR),
        "left_eye": _LEFT_EYE_DIR / np.linalg.norm(_LEFT_EYE_DIR),
        "right_eye": _RIGHT_EYE_DIR / np.linalg.norm(_RIGHT_EYE_DIR),
    }
    positions = {
        name: d * FACE_RADIUS_MM * radial_scale(d[None, :])[0]
        for name, d in landmark_dirs.items()
    }
    if axes is not None:
        points = points * axes[None, :]
        positions = {name: p * axes for name, p in positions.items()}
    return TriMesh(points, faces), positions


def _clover_arclength_samples(n: int) -> np.ndarray:
    """n points tracing r = cos(2 phi) petals at uniform arc length.

    The four petals point along +x, +y, -x, -y; each petal is swept by
    phi in [-pi/4, pi/4] around its axis and passes through the origin.
    """
    dense = 4000
    phi = np.linspace(-np.pi / 4, np.pi / 4, dense)
    pts_all = []
    for m in range(4):
        r = np.cos(2 * phi)
        ang = phi + m * np.pi / 2
        pts_all.append(np.column_stack([r * np.cos(ang), r * np.sin(ang)]))
    curve = np.vstack(pts_all)
    seg = np.linalg.norm(np.diff(curve, axis=0, append=curve[:1]), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    targets = np.arange(n) / n * total
    idx = np.searchsorted(cum, targets, side="right") - 1
    idx = np.clip(idx, 0, len(curve) - 1)
    frac = (targets - cum[idx]) / np.where(seg[idx] > 0, seg[idx], 1.0)
    nxt = (idx + 1) % len(curve)
    return curve[idx] + (curve[nxt] - curve[idx]) * frac[:, None]


def _leaf_fill_points(leaf: int) -> np.ndarray:
    """Five interior points along the spine of one clover leaf.

    The chain splits the leaf's hole into slivers whose cycles persist
    far less than an open leaf's loop, so the leaf no longer stands out
    in a degree-1 barcode.
    """
    r = np.array([0.16, 0.33, 0.50, 0.67, 0.84])
    ang = leaf * np.pi / 2
    return np.column_stack([r * np.cos(ang), r * np.sin(ang)])


def clover_points(
    n_points: int = 200,
    seed: int = 0,
    fill_leaves: int = 0,
    noise: float = 0.0,
) -> PointCloud:
    """Sample a hollow four-leaf clover, optionally filling some leaves.

    Points are spread at uniform arc length along the rose r = cos(2 phi)
    (unit size, z = 0).  fill_leaves in 0..4 adds 5 interior points per
    filled leaf, which kills that leaf's loop at small scales.  noise is
    the standard deviation of isotropic 3D jitter.  The value channel is
    the codensity (distance to the 10th nearest neighbor), largest for
    isolated points.

    Raises
    ------
    ValueError
        If n_points < 8 or fill_leaves is outside 0..4.
    """
    if n_points < 8:
        raise ValueError(f"need at least 8 points, got {n_points}")
    if not 0 <= fill_leaves <= 4:
        raise ValueError(f"fill_leaves must be in 0..4, got {fill_leaves}")
    pts2 = _clover_arclength_samples(n_points)
    for leaf in range(fill_leaves):
        pts2 = np.vstack([pts2, _leaf_fill_points(leaf)])
    pts = np.column_stack([pts2, np.zeros(len(pts2))])
    if noise > 0.0:
        rng = np.random.default_rng(seed)
        pts = pts + rng.normal(0.0, noise, size=pts.shape)
    dists = cdist(pts, pts)
    k = min(CODENSITY_NEIGHBOR, len(pts) - 1)
    codensity = np.sort(dists, axis=1)[:, k]
    return PointCloud(pts, codensity)


def _nearest_distinct_vertices(vertices: np.ndarray, targets: list[np.ndarray]) -> list[int]:
    chosen: list[int] = []
    for tgt in targets:
        order = np.argsort(np.linalg.norm(vertices - tgt[None, :], axis=1), kind="stable")
        pick = next(int(i) for i in order if int(i) not in chosen)
        chosen.append(pick)
    return chosen


def generate_synthetic(
    family: str,
    n_subjects: int,
    noise: float = 0.0,
    seed: int = 0,
    out_dir: str | Path = "synthetic-data",
) -> dict:
    """Write a two-group synthetic dataset to disk.

    Families
    --------
    sphere-bump
        All subjects are bumped spherical caps; the risk group's nose
        bump is 1.5x stronger.
    ellipsoid-bump
        The no-risk group is spherical, the risk group is stretched to
        ellipsoid axes (1.22, 0.94, 0.86): a strong global offset.
    clover-cloud
        XYZ point clouds on the four-leaf clover; the risk group has
        two leaves filled with interior points.

    Outputs: subjects/<id>.stl (or .xyz), landmarks.csv (vertex indices
    of nose and eyes; header only for clouds), labels.csv with groups
    no-risk / risk.  The first half of the subjects (by id) is no-risk.
    noise is millimeter-scale radial jitter for meshes and isotropic
    jitter for clouds.  Re-running with identical arguments reproduces
    identical files.

    Returns a summary dict with ids, labels, and written paths.
    """
    if family not in FAMILIES:
        raise ValueError(f"family must be one of {FAMILIES}, got {family!r}")
    if n_subjects < 2:
        raise ValueError(f"need at least 2 subjects, got {n_subjects}")
    out = Path(out_dir)
    subj_dir = out / "subjects"
    subj_dir.mkdir(parents=True, exist_ok=True)

    ids = [f"s{i:03d}" for i in range(1, n_subjects + 1)]
    n_norisk = (n_subjects + 1) // 2
    labels = {sid: ("no-risk" if i < n_norisk else "risk") for i, sid in enumerate(ids)}

    files: list[str] = []
    landmark_rows: list[tuple[str, int, int, int]] = []
    for i, sid in enumerate(ids):
        rng = np.random.default_rng((seed, i))
        risky = labels[sid] == "risk"
        if family == "clover-cloud":
            cloud = clover_points(
                n_points=200,
                seed=seed * 100003 + i,
                fill_leaves=2 if risky else 0,
                noise=noise,
            )
            path = subj_dir / f"{sid}.xyz"
            write_xyz(cloud, path)
        else:
            nose_amp = _NOSE_AMP * (_RISK_NOSE_FACTOR if risky and family == "sphere-bump" else 1.0)
            axes = _ELLIPSOID_AXES if risky and family == "ellipsoid-bump" else None
            mesh, positions = make_face_mesh(
                nose_amp=nose_amp, axes=axes, radial_noise=noise, rng=rng
            )
            path = subj_dir / f"{sid}.stl"
            write_stl_binary(mesh, path)
            welded = parse_stl(path.read_bytes())
            nose, left, right = _nearest_distinct_vertices(
                welded.vertices,
                [positions["nose"], positions["left_eye"], positions["right_eye"]],
            )
            Landmarks(nose, left, right)
            landmark_rows.append((sid, nose, left, right))
        files.append(str(path))

    landmarks_path = out / "landmarks.csv"
    with open(landmarks_path, "w") as fh:
        fh.write("subject_id,nose_idx,left_eye_idx,right_eye_idx\n")
        for sid, nose, left, right in landmark_rows:
            fh.write(f"{sid},{nose},{left},{right}\n")
    labels_path = out / "labels.csv"
    with open(labels_path, "w") as fh:
        fh.write("subject_id,label\n")
        for sid in ids:
            fh.write(f"{sid},{labels[sid]}\n")
    files.extend([str(landmarks_path), str(labels_path)])

    return {
        "family": family,
        "ids": ids,
        "labels": labels,
        "files": files,
        "dataset_dir": str(out),
    }
