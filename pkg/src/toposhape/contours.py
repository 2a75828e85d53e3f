"""Level-curve extraction from scalar fields on meshes, and curve resampling.

A level curve of a per-vertex field is traced through mesh triangles by
linear interpolation along crossing edges.  Per level only the longest
connected component is kept, reordered to run clockwise in its best-fit
plane.  Facial pipelines use the vertical coordinate as the field, which
yields ear-to-ear contour arcs on an aligned scan.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .mesh import TriMesh
from .shape import Curve


@dataclass(frozen=True)
class FacialCurves:
    """An ordered bundle of level curves with their level values."""

    curves: tuple[Curve, ...]
    level_values: tuple[float, ...]

    def __post_init__(self):
        if len(self.curves) != len(self.level_values):
            raise ValueError("one level value per curve required")
        lv = np.asarray(self.level_values, dtype=float)
        if len(lv) > 1 and not (np.diff(lv) > 0).all():
            raise ValueError("level values must be strictly increasing")

    def __len__(self) -> int:
        return len(self.curves)


def default_levels(field_values: np.ndarray, k: int = 20) -> np.ndarray:
    """k levels evenly spaced between the 5th and 95th percentile of the field."""
    if k < 1:
        raise ValueError("k must be >= 1")
    lo, hi = np.percentile(np.asarray(field_values, dtype=float), [5.0, 95.0])
    return np.linspace(lo, hi, k)


def _resolve_field(mesh: TriMesh, field) -> np.ndarray:
    if isinstance(field, str):
        if field not in mesh.fields:
            raise ValueError(f"mesh has no field {field!r}")
        return mesh.fields[field]
    vals = np.asarray(field, dtype=float)
    if vals.shape != (mesh.n_vertices,):
        raise ValueError("field must give one value per vertex")
    return vals


def _trace_level(mesh: TriMesh, vals: np.ndarray, level: float) -> list[tuple[list[int], bool]]:
    """Connected polyline components of one level set.

    Returns a list of (ordered crossing-edge keys, closed_flag).  Keys
    index into a shared crossing-point table built by the caller via the
    same (u, v) edge identity.
    """
    side = vals - level
    f = mesh.faces
    s = side[f]
    segments = []
    for tri, stri in zip(f, s):
        crossing = []
        for a, b in ((0, 1), (1, 2), (0, 2)):
            if stri[a] * stri[b] < 0.0:
                u, v = sorted((int(tri[a]), int(tri[b])))
                crossing.append((u, v))
        if len(crossing) == 2:
            segments.append((crossing[0], crossing[1]))
    adjacency: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for e1, e2 in segments:
        adjacency.setdefault(e1, []).append(e2)
        adjacency.setdefault(e2, []).append(e1)

    components = []
    visited: set[tuple[int, int]] = set()
    # Deterministic walk order: start from endpoints (degree 1) first, then
    # any remaining nodes (closed loops), all in sorted key order.
    endpoints = sorted(k for k, nb in adjacency.items() if len(nb) == 1)
    loop_starts = sorted(adjacency)
    for start in endpoints + loop_starts:
        if start in visited:
            continue
        chain = [start]
        visited.add(start)
        prev = None
        node = start
        closed = False
        while True:
            step = None
            for nb in sorted(adjacency[node]):
                if nb == prev:
                    continue
                if nb == start and len(chain) > 2:
                    closed = True
                    break
                if nb not in visited:
                    step = nb
                    break
            if closed or step is None:
                break
            chain.append(step)
            visited.add(step)
            prev, node = node, step
        components.append((chain, closed))
    return components


def _orient(points: np.ndarray, closed: bool) -> np.ndarray:
    """Reorder a polyline to run clockwise in its best-fit plane.

    The plane normal is the smallest principal axis, flipped to have a
    positive dot product with +y (falling back to +z then +x when the
    normal is orthogonal to y).  Orientation ambiguity for degenerate
    (straight) curves is broken by making the first point's x-coordinate
    non-decreasing along the walk.
    """
    centered = points - points.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    normal = vt[-1]
    for ref in (np.array([0.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0])):
        d = float(np.dot(normal, ref))
        if abs(d) > 1e-9:
            if d < 0:
                normal = -normal
            break
    ring = np.vstack([centered, centered[:1]]) if closed else centered
    cross_sum = np.sum(np.cross(ring[:-1], ring[1:]), axis=0)
    turn = float(np.dot(cross_sum, normal))
    if abs(turn) > 1e-12:
        if turn > 0:  # counter-clockwise about the normal: reverse
            points = points[::-1]
    elif points[0, 0] > points[-1, 0]:
        points = points[::-1]
    return points


def extract_level_curves(mesh: TriMesh, field, levels) -> FacialCurves:
    """Extract one level curve per requested level of a per-vertex field.

    Per level, crossing points are interpolated along mesh edges, chained
    into components, and the longest component (by arc length) is kept.
    Components shorter than 3 points and levels with no crossings are
    dropped.  Curves are returned clockwise-oriented; closed curves start
    at their lexicographically smallest point.

    Raises
    ------
    ValueError
        If a requested level lies outside the field range.
    """
    vals = _resolve_field(mesh, field)
    levels = np.atleast_1d(np.asarray(levels, dtype=float))
    lo, hi = float(vals.min()), float(vals.max())
    outside = [float(l) for l in levels if l < lo or l > hi]
    if outside:
        raise ValueError(f"levels {outside} outside field range [{lo}, {hi}]")
    span = hi - lo if hi > lo else 1.0

    curves: list[Curve] = []
    kept_levels: list[float] = []
    for level in levels:
        work = float(level)
        if np.any(vals == work):  # nudge off exact vertex hits
            work = work + 1e-12 * span
        components = _trace_level(mesh, vals, work)
        best_points = None
        best_len = -1.0
        best_closed = False
        for chain, closed in components:
            if len(chain) < 3:
                continue
            pts = np.empty((len(chain), 3))
            for i, (u, v) in enumerate(chain):
                t = (work - vals[u]) / (vals[v] - vals[u])
                pts[i] = mesh.vertices[u] + t * (mesh.vertices[v] - mesh.vertices[u])
            ring = np.vstack([pts, pts[:1]]) if closed else pts
            arc = float(np.linalg.norm(np.diff(ring, axis=0), axis=1).sum())
            if arc > best_len:
                best_len = arc
                best_points = pts
                best_closed = closed
        if best_points is None:
            continue
        pts = _orient(best_points, best_closed)
        if best_closed:
            start = int(np.lexsort((pts[:, 2], pts[:, 1], pts[:, 0]))[0])
            pts = np.roll(pts, -start, axis=0)
        curves.append(Curve(pts, "closed" if best_closed else "open"))
        kept_levels.append(float(level))
    return FacialCurves(tuple(curves), tuple(kept_levels))


def resample_curve(curve: Curve, m: int) -> Curve:
    """Resample a curve to m points equally spaced in arc length.

    Coordinates are interpolated with a cubic spline (natural ends for
    open curves, periodic for closed).  Open endpoints are preserved
    exactly; closed curves keep their original start point.

    Raises
    ------
    ValueError
        If m < 3, consecutive input points coincide, or the curve has
        zero total length.
    """
    if m < 3:
        raise ValueError(f"m must be >= 3, got {m}")
    pts = curve.points
    closed = curve.kind == "closed"
    knots = np.vstack([pts, pts[:1]]) if closed else pts
    chords = np.linalg.norm(np.diff(knots, axis=0), axis=1)
    if np.all(chords == 0.0):
        raise ValueError("zero-length curve")
    if np.any(chords == 0.0):
        raise ValueError("coincident consecutive points")
    u = np.concatenate([[0.0], np.cumsum(chords)])
    spline = CubicSpline(u, knots, axis=0, bc_type="periodic" if closed else "natural")

    n_dense = max(4096, 256 * m)
    u_dense = np.linspace(0.0, u[-1], n_dense + 1)
    dense = spline(u_dense)
    seg = np.linalg.norm(np.diff(dense, axis=0), axis=1)
    s_dense = np.concatenate([[0.0], np.cumsum(seg)])
    total = s_dense[-1]

    if closed:
        s_targets = np.arange(m) / m * total
    else:
        s_targets = np.linspace(0.0, total, m)
    u_targets = np.interp(s_targets, s_dense, u_dense)
    out = spline(u_targets)
    if closed:
        out[0] = pts[0]
    else:
        out[0] = pts[0]
        out[-1] = pts[-1]
    return Curve(out, curve.kind)


def write_curves_csv(curves, path) -> None:
    """Write curves as rows `curve_index,point_index,x,y,z`.

    Accepts a FacialCurves bundle or any sequence of Curve; planar
    curves are written with z = 0.
    """
    items = list(getattr(curves, "curves", curves))
    with open(path, "w") as fh:
        fh.write("curve_index,point_index,x,y,z\n")
        for ci, curve in enumerate(items):
            pts = curve.points
            if pts.shape[1] == 2:
                pts = np.column_stack([pts, np.zeros(len(pts))])
            for pi, (x, y, z) in enumerate(pts):
                fh.write(f"{ci},{pi},{x:.17g},{y:.17g},{z:.17g}\n")


def read_curves_csv(path, kind: str = "open") -> list[Curve]:
    """Read curves written by write_curves_csv; kind applies to all."""
    groups: dict[int, list[tuple[int, float, float, float]]] = {}
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "curve_index,point_index,x,y,z":
            raise ValueError(f"unexpected curve CSV header: {header!r}")
        for ln, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 5:
                raise ValueError(f"line {ln}: expected 5 fields, got {len(parts)}")
            try:
                ci, pi = int(parts[0]), int(parts[1])
                x, y, z = (float(v) for v in parts[2:])
            except ValueError as exc:
                raise ValueError(f"line {ln}: {exc}") from None
            groups.setdefault(ci, []).append((pi, x, y, z))
    curves = []
    for ci in sorted(groups):
        rows = sorted(groups[ci])
        pts = np.array([(x, y, z) for _, x, y, z in rows])
        curves.append(Curve(pts, kind))
    return curves


def write_geodesic_csv(steps, path) -> None:
    """Write a geodesic path of curve bundles with a leading step column.

    steps is a sequence over path steps; each element is a Curve or a
    sequence of Curves.  Schema: `step,curve_index,point_index,x,y,z`.
    """
    with open(path, "w") as fh:
        fh.write("step,curve_index,point_index,x,y,z\n")
        for si, element in enumerate(steps):
            bundle = [element] if isinstance(element, Curve) else list(element)
            for ci, curve in enumerate(bundle):
                pts = curve.points
                if pts.shape[1] == 2:
                    pts = np.column_stack([pts, np.zeros(len(pts))])
                for pi, (x, y, z) in enumerate(pts):
                    fh.write(f"{si},{ci},{pi},{x:.17g},{y:.17g},{z:.17g}\n")
