"""Triangle meshes and point clouds: file I/O, curvature, sampling, alignment.

Coordinates are millimeters throughout.  STL facets are welded into shared
vertices with an exact tolerance of WELD_TOL, so meshes loaded from facet
soup expose real connectivity for curvature and contour extraction.
"""

from __future__ import annotations

import re
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, StlParseError

WELD_TOL = 1e-6
CURVATURE_CLAMP = 0.5


@dataclass
class TriMesh:
    """A triangulated surface with optional per-vertex scalar fields.

    Invariants: face indices are in range, every face has three distinct
    vertices, vertices are welded (no two closer than WELD_TOL).
    """

    vertices: np.ndarray
    faces: np.ndarray
    fields: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=float)
        f = np.ascontiguousarray(self.faces, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValueError(f"vertices must be (n, 3), got {v.shape}")
        if f.ndim != 2 or f.shape[1] != 3:
            raise ValueError(f"faces must be (m, 3), got {f.shape}")
        if not np.isfinite(v).all():
            raise ValueError("vertices must be finite")
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise ValueError("face index out of range")
        same = (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])
        if same.any():
            raise ValueError(f"degenerate face at index {int(np.nonzero(same)[0][0])}")
        for name, vals in self.fields.items():
            vals = np.asarray(vals, dtype=float)
            if vals.shape != (len(v),):
                raise ValueError(f"field {name!r} must have one value per vertex")
            self.fields[name] = vals
        self.vertices = v
        self.faces = f

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)


@dataclass
class PointCloud:
    """Points in R^3 with an optional per-point scalar value."""

    points: np.ndarray
    values: np.ndarray | None = None

    def __post_init__(self):
        p = np.ascontiguousarray(self.points, dtype=float)
        if p.ndim != 2 or p.shape[1] != 3:
            raise ValueError(f"points must be (n, 3), got {p.shape}")
        if not np.isfinite(p).all():
            raise ValueError("points must be finite")
        if self.values is not None:
            v = np.asarray(self.values, dtype=float)
            if v.shape != (len(p),):
                raise ValueError("values must have one entry per point")
            if not np.isfinite(v).all():
                raise ValueError("values must be finite")
            self.values = v
        self.points = p

    @property
    def n_points(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class Landmarks:
    """Vertex indices of the nose tip and the two eye landmarks."""

    nose: int
    left_eye: int
    right_eye: int

    def __post_init__(self):
        idx = (self.nose, self.left_eye, self.right_eye)
        if len(set(idx)) != 3:
            raise ValueError(f"landmark indices must be distinct, got {idx}")
        if any(i < 0 for i in idx):
            raise ValueError("landmark indices must be non-negative")


def _weld(raw_vertices: np.ndarray, raw_faces: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Merge vertices that quantize to the same WELD_TOL grid cell.

    Vertex order follows first appearance in the facet stream.
    """
    keys = np.round(raw_vertices / WELD_TOL).astype(np.int64)
    seen: dict[tuple[int, int, int], int] = {}
    index_map = np.empty(len(raw_vertices), dtype=np.int64)
    order: list[int] = []
    for i, key in enumerate(map(tuple, keys)):
        j = seen.get(key)
        if j is None:
            j = len(order)
            seen[key] = j
            order.append(i)
        index_map[i] = j
    return raw_vertices[order], index_map[raw_faces]


def parse_stl(data: bytes) -> TriMesh:
    """Parse ASCII or binary STL bytes into a welded TriMesh.

    Binary layout: 80-byte header, uint32 facet count, then 50 bytes per
    facet (12 little-endian float32 for normal and three vertices, plus a
    2-byte attribute).  Malformed input raises StlParseError carrying the
    byte offset of the problem.
    """
    if not isinstance(data, bytes):
        raise TypeError("parse_stl expects bytes")
    is_ascii = data[:5] == b"solid" and b"facet" in data[:512]
    if is_ascii:
        tris = _parse_stl_ascii(data)
    else:
        tris = _parse_stl_binary(data)
    if len(tris) == 0:
        raise StlParseError("STL contains no facets")
    raw_vertices = tris.reshape(-1, 3)
    raw_faces = np.arange(len(raw_vertices), dtype=np.int64).reshape(-1, 3)
    vertices, faces = _weld(raw_vertices, raw_faces)
    try:
        return TriMesh(vertices.astype(float), faces)
    except ValueError as exc:
        raise StlParseError(f"invalid mesh after welding: {exc}") from exc


def _parse_stl_binary(data: bytes) -> np.ndarray:
    if len(data) < 84:
        raise StlParseError("binary STL shorter than an 84-byte header", offset=len(data))
    (count,) = struct.unpack_from("<I", data, 80)
    expected = 84 + 50 * count
    if len(data) < expected:
        raise StlParseError(
            f"binary STL truncated: {count} facets declared, data ends early",
            offset=len(data),
        )
    rec = np.frombuffer(data, dtype=np.uint8, count=50 * count, offset=84).reshape(count, 50)
    floats = rec[:, :48].copy().view("<f4").reshape(count, 4, 3).astype(np.float64)
    tris = floats[:, 1:4, :]
    if not np.isfinite(tris).all():
        bad = int(np.nonzero(~np.isfinite(tris).all(axis=(1, 2)))[0][0])
        raise StlParseError(f"non-finite vertex in facet {bad}", offset=84 + 50 * bad)
    return tris


_TOKEN = re.compile(rb"\S+")


def _parse_stl_ascii(data: bytes) -> np.ndarray:
    tokens = [(m.group(0), m.start()) for m in _TOKEN.finditer(data)]
    pos = 0

    def peek():
        return tokens[pos][0] if pos < len(tokens) else None

    def take(expect: bytes | None = None) -> tuple[bytes, int]:
        nonlocal pos
        if pos >= len(tokens):
            raise StlParseError(
                f"ASCII STL ended early, expected {expect!r}", offset=len(data)
            )
        tok, off = tokens[pos]
        pos += 1
        if expect is not None and tok.lower() != expect:
            raise StlParseError(f"expected {expect!r}, found {tok!r}", offset=off)
        return tok, off

    def take_float() -> float:
        tok, off = take()
        try:
            return float(tok)
        except ValueError:
            raise StlParseError(f"expected a number, found {tok!r}", offset=off) from None

    take(b"solid")
    # Optional solid name: consume tokens until the first keyword.
    while peek() is not None and peek().lower() not in (b"facet", b"endsolid"):
        take()
    tris = []
    while True:
        tok = peek()
        if tok is None:
            raise StlParseError("ASCII STL missing endsolid", offset=len(data))
        if tok.lower() == b"endsolid":
            break
        take(b"facet")
        take(b"normal")
        for _ in range(3):
            take_float()
        take(b"outer")
        take(b"loop")
        corners = []
        for _ in range(3):
            take(b"vertex")
            corners.append([take_float(), take_float(), take_float()])
        take(b"endloop")
        take(b"endfacet")
        tris.append(corners)
    return np.asarray(tris, dtype=float).reshape(-1, 3, 3)


def write_stl_binary(mesh: TriMesh, path) -> None:
    """Write a TriMesh as binary STL with right-hand-rule facet normals."""
    v = mesh.vertices
    f = mesh.faces
    a, b, c = v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]
    n = np.cross(b - a, c - a)
    lengths = np.linalg.norm(n, axis=1)
    n = np.where(lengths[:, None] > 0, n / np.where(lengths == 0, 1, lengths)[:, None], 0.0)
    rec = np.zeros(
        len(f),
        dtype=[("n", "<f4", 3), ("a", "<f4", 3), ("b", "<f4", 3), ("c", "<f4", 3), ("attr", "<u2")],
    )
    rec["n"], rec["a"], rec["b"], rec["c"] = n, a, b, c
    with open(path, "wb") as fh:
        fh.write(b"\0" * 80)
        fh.write(struct.pack("<I", len(f)))
        fh.write(rec.tobytes())


def load_xyz(path) -> PointCloud:
    """Load a whitespace-delimited point cloud: x y z per line, optional 4th value column."""
    rows = []
    has_value = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if len(parts) not in (3, 4):
                raise DataError(f"{path}: line {lineno} has {len(parts)} columns, expected 3 or 4")
            if has_value is None:
                has_value = len(parts) == 4
            elif has_value != (len(parts) == 4):
                raise DataError(f"{path}: inconsistent column count at line {lineno}")
            try:
                rows.append([float(p) for p in parts])
            except ValueError:
                raise DataError(f"{path}: non-numeric value at line {lineno}") from None
    if not rows:
        raise DataError(f"{path}: no points")
    arr = np.asarray(rows, dtype=float)
    if has_value:
        return PointCloud(arr[:, :3], arr[:, 3])
    return PointCloud(arr[:, :3])


def write_xyz(cloud: PointCloud, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if cloud.values is None:
            for p in cloud.points:
                fh.write(f"{p[0]:.17g} {p[1]:.17g} {p[2]:.17g}\n")
        else:
            for p, v in zip(cloud.points, cloud.values):
                fh.write(f"{p[0]:.17g} {p[1]:.17g} {p[2]:.17g} {v:.17g}\n")


def _vertex_adjacency(mesh: TriMesh) -> list[set[int]]:
    neighbors: list[set[int]] = [set() for _ in range(mesh.n_vertices)]
    for i, j, k in mesh.faces:
        neighbors[i].update((j, k))
        neighbors[j].update((i, k))
        neighbors[k].update((i, j))
    return neighbors


def boundary_vertices(mesh: TriMesh) -> np.ndarray:
    """Boolean mask of vertices on an open boundary (edge with one incident face)."""
    edges = np.sort(
        np.concatenate([mesh.faces[:, [0, 1]], mesh.faces[:, [1, 2]], mesh.faces[:, [0, 2]]]),
        axis=1,
    )
    uniq, counts = np.unique(edges, axis=0, return_counts=True)
    mask = np.zeros(mesh.n_vertices, dtype=bool)
    mask[uniq[counts == 1].ravel()] = True
    return mask


def mean_curvature(mesh: TriMesh, clamp: float = CURVATURE_CLAMP) -> np.ndarray:
    """Signed discrete mean curvature per vertex via the cotangent Laplacian.

    The sign convention makes a unit sphere with outward-oriented faces
    come out at +1.  A one-ring Laplacian smoothing pass is applied,
    then values are clamped to [-clamp, clamp].  Boundary vertices get
    the mean of their interior one-ring neighbors before smoothing.

    Raises
    ------
    ValueError
        If clamp <= 0 or some vertex has an empty one-ring.
    """
    if clamp <= 0:
        raise ValueError(f"clamp must be positive, got {clamp}")
    v = mesh.vertices
    f = mesh.faces
    nv = mesh.n_vertices
    degree = np.zeros(nv, dtype=np.int64)
    np.add.at(degree, f.ravel(), 1)
    if (degree == 0).any():
        raise ValueError(f"isolated vertex {int(np.nonzero(degree == 0)[0][0])} has no faces")

    lap = np.zeros((nv, 3))
    area = np.zeros(nv)
    normal = np.zeros((nv, 3))
    corners = (v[f[:, 0]], v[f[:, 1]], v[f[:, 2]])
    for c in range(3):
        p0 = corners[c]
        p1 = corners[(c + 1) % 3]
        p2 = corners[(c + 2) % 3]
        # cot of the angle at corner c, opposite the edge (c+1, c+2)
        u, w = p1 - p0, p2 - p0
        cross = np.cross(u, w)
        cross_norm = np.linalg.norm(cross, axis=1)
        cot = np.einsum("ij,ij->i", u, w) / np.where(cross_norm == 0, 1.0, cross_norm)
        i1 = f[:, (c + 1) % 3]
        i2 = f[:, (c + 2) % 3]
        np.add.at(lap, i1, cot[:, None] * (v[i1] - v[i2]))
        np.add.at(lap, i2, cot[:, None] * (v[i2] - v[i1]))
        tri_area = 0.5 * cross_norm
        np.add.at(area, f[:, c], tri_area / 3.0)
        np.add.at(normal, f[:, c], cross)

    area = np.where(area > 0, area, 1.0)
    k_vec = lap / (2.0 * area[:, None])
    nrm = np.linalg.norm(normal, axis=1)
    normal = normal / np.where(nrm == 0, 1.0, nrm)[:, None]
    h = 0.5 * np.sign(np.einsum("ij,ij->i", k_vec, normal)) * np.linalg.norm(k_vec, axis=1)

    neighbors = _vertex_adjacency(mesh)
    on_boundary = boundary_vertices(mesh)
    if on_boundary.any():
        filled = h.copy()
        for i in np.nonzero(on_boundary)[0]:
            interior = [j for j in neighbors[i] if not on_boundary[j]]
            filled[i] = float(np.mean(h[interior])) if interior else 0.0
        h = filled

    smoothed = np.empty_like(h)
    for i in range(nv):
        ring = list(neighbors[i])
        smoothed[i] = 0.5 * h[i] + 0.5 * float(np.mean(h[ring]))
    return np.clip(smoothed, -clamp, clamp)


def stratified_downsample(cloud: PointCloud, target: int, seed: int) -> PointCloud:
    """Downsample to min(target, n) points with spatial stratification.

    The bounding box is split into an axis-aligned grid with
    ceil(target ** (1/3)) cells per axis; every nonempty cell keeps at
    least one point when the budget allows, remaining slots are spread
    proportionally to cell population, and the picks inside a cell are
    uniform under the seed.

    Raises
    ------
    ValueError
        If target < 1.
    """
    if target < 1:
        raise ValueError(f"target must be >= 1, got {target}")
    n = cloud.n_points
    if n == 0:
        raise ValueError("cannot downsample an empty cloud")
    if target >= n:
        return PointCloud(cloud.points.copy(),
                          None if cloud.values is None else cloud.values.copy())

    pts = cloud.points
    g = int(np.ceil(target ** (1.0 / 3.0) - 1e-12))
    lo = pts.min(axis=0)
    span = pts.max(axis=0) - lo
    span = np.where(span > 0, span, 1.0)
    cell = np.minimum((pts - lo) / span * g, g - 1).astype(np.int64)
    cell_ids = cell[:, 0] * g * g + cell[:, 1] * g + cell[:, 2]

    strata: dict[int, np.ndarray] = {
        int(cid): np.nonzero(cell_ids == cid)[0] for cid in np.unique(cell_ids)
    }
    order = sorted(strata)
    sizes = {cid: len(strata[cid]) for cid in order}

    quotas = {cid: 0 for cid in order}
    if len(order) <= target:
        for cid in order:
            quotas[cid] = 1
        remaining = target - len(order)
        while remaining > 0:
            free = {cid: sizes[cid] - quotas[cid] for cid in order}
            total_free = sum(free.values())
            shares = {cid: remaining * free[cid] / total_free for cid in order}
            floors = {cid: min(int(shares[cid]), free[cid]) for cid in order}
            given = sum(floors.values())
            for cid in order:
                quotas[cid] += floors[cid]
            remaining -= given
            if given == 0:
                # Largest fractional remainders take the last slots.
                ranked = sorted(order, key=lambda c: (-(shares[c] - floors[c]), c))
                for cid in ranked:
                    if remaining == 0:
                        break
                    if quotas[cid] < sizes[cid]:
                        quotas[cid] += 1
                        remaining -= 1
    else:
        # More occupied cells than budget: biggest cells win, ties by cell id.
        ranked = sorted(order, key=lambda c: (-sizes[c], c))
        for cid in ranked[:target]:
            quotas[cid] = 1

    rng = np.random.default_rng(seed)
    chosen: list[np.ndarray] = []
    for cid in order:
        q = quotas[cid]
        if q == 0:
            continue
        members = strata[cid]
        if q >= len(members):
            chosen.append(members)
        else:
            chosen.append(rng.choice(members, size=q, replace=False))
    idx = np.sort(np.concatenate(chosen))
    return PointCloud(pts[idx], None if cloud.values is None else cloud.values[idx])


def landmark_align(mesh: TriMesh, landmarks: Landmarks) -> TriMesh:
    """Rigidly move a mesh into the canonical landmark frame.

    The eye midpoint goes to the origin, the left-to-right eye axis to +x,
    and the nose tip into the x-z half-plane with z > 0.  The rotation is
    proper (determinant +1); no scaling or reflection.

    Raises
    ------
    ValueError
        If any landmark index is out of range or the three landmarks are
        collinear (triangle area <= 1e-9).
    """
    for idx in (landmarks.nose, landmarks.left_eye, landmarks.right_eye):
        if idx >= mesh.n_vertices:
            raise ValueError(f"landmark index {idx} out of range for {mesh.n_vertices} vertices")
    nose = mesh.vertices[landmarks.nose]
    le = mesh.vertices[landmarks.left_eye]
    re_ = mesh.vertices[landmarks.right_eye]
    mid = 0.5 * (le + re_)
    x_axis = re_ - le
    nose_vec = nose - mid
    area = 0.5 * np.linalg.norm(np.cross(x_axis, nose_vec))
    if area <= 1e-9:
        raise ValueError("landmarks are collinear, cannot define a frame")
    x_axis = x_axis / np.linalg.norm(x_axis)
    z_axis = nose_vec - np.dot(nose_vec, x_axis) * x_axis
    z_axis = z_axis / np.linalg.norm(z_axis)
    y_axis = np.cross(z_axis, x_axis)
    rot = np.vstack([x_axis, y_axis, z_axis])  # maps axes onto e_x, e_y, e_z
    verts = (mesh.vertices - mid) @ rot.T
    return TriMesh(verts, mesh.faces.copy(), {k: v.copy() for k, v in mesh.fields.items()})
