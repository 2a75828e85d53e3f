"""Two-parameter persistent homology of valued point clouds.

A valued cloud induces a bifiltration: simplices enter at a distance grade
t (their diameter, Vietoris-Rips style) and a value grade tau (the max of
their vertices' scalar values).  Restricting tau gives an ordinary
one-parameter filtration whose barcode is computed by column reduction of
the boundary matrix over GF(2).  Evaluating Betti numbers on a grid of
(t, tau) grades yields the Hilbert (dimension) function used as a
per-subject descriptor.

Simplices go up to dimension 2, so homology degrees 0 and 1 are available.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .mesh import PointCloud

MAX_DIM = 2


class Simplex(NamedTuple):
    """A simplex with its bifiltration grades.  Vertices are sorted ids."""

    vertices: tuple[int, ...]
    t: float
    tau: float

    @property
    def dim(self) -> int:
        return len(self.vertices) - 1


class Filtration:
    """A one-parameter filtration of simplices (dimension <= 2).

    Internally simplices are grouped by dimension, each group ordered by
    appearance grade.  Instances built by restrict() are valid by
    construction; instances built from a raw simplex sequence are
    validated when a barcode is requested.
    """

    def __init__(
        self,
        by_dim: dict[int, tuple[np.ndarray, np.ndarray]],
        sequence: tuple[Simplex, ...] | None = None,
        validated: bool = False,
    ):
        self._by_dim = by_dim
        self._sequence = sequence
        self._validated = validated

    @classmethod
    def from_simplices(cls, simplices: Iterable[Simplex]) -> "Filtration":
        seq = tuple(
            sp if isinstance(sp, Simplex) else Simplex(tuple(sp[0]), float(sp[1]), 0.0)
            for sp in simplices
        )
        by_dim: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        for d in range(MAX_DIM + 1):
            members = [sp for sp in seq if sp.dim == d]
            verts = np.asarray([sp.vertices for sp in members], dtype=np.int64).reshape(
                len(members), d + 1
            )
            t = np.asarray([sp.t for sp in members], dtype=float)
            by_dim[d] = (verts, t)
        return cls(by_dim, sequence=seq, validated=False)

    def dim_arrays(self, d: int) -> tuple[np.ndarray, np.ndarray]:
        verts, t = self._by_dim.get(d, (np.empty((0, d + 1), dtype=np.int64), np.empty(0)))
        return verts, t

    def __len__(self) -> int:
        return sum(len(t) for _, t in self._by_dim.values())

    def simplices(self) -> Iterator[Simplex]:
        """All simplices in (t, dim, lexicographic) order."""
        if self._sequence is not None:
            yield from self._sequence
            return
        entries = []
        for d in sorted(self._by_dim):
            verts, t = self._by_dim[d]
            for row, ti in zip(verts, t):
                entries.append(Simplex(tuple(int(x) for x in row), float(ti), 0.0))
        entries.sort(key=lambda sp: (sp.t, sp.dim, sp.vertices))
        yield from entries

    def _validate(self) -> None:
        if self._validated:
            return
        if self._sequence is None:
            self._validated = True
            return
        seen: set[tuple[int, ...]] = set()
        prev_t = -math.inf
        for pos, sp in enumerate(self._sequence):
            if sp.dim > MAX_DIM:
                raise ValueError(f"simplex {sp.vertices} exceeds dimension {MAX_DIM}")
            if tuple(sorted(sp.vertices)) != sp.vertices or len(set(sp.vertices)) != len(
                sp.vertices
            ):
                raise ValueError(f"simplex vertices must be sorted and distinct: {sp.vertices}")
            if sp.t < prev_t:
                raise ValueError(
                    f"filtration not grade-sorted at position {pos}: {sp.t} after {prev_t}"
                )
            prev_t = sp.t
            if sp.vertices in seen:
                raise ValueError(f"duplicate simplex {sp.vertices}")
            if sp.dim > 0:
                for k in range(len(sp.vertices)):
                    face = sp.vertices[:k] + sp.vertices[k + 1 :]
                    if face not in seen:
                        raise ValueError(
                            f"filtration not face-closed: {sp.vertices} appears before {face}"
                        )
            seen.add(sp.vertices)
        self._validated = True


@dataclass(frozen=True)
class Barcode:
    """Persistence intervals [birth, death) of one homology degree."""

    degree: int
    intervals: tuple[tuple[float, float], ...]

    def count_at(self, t: float) -> int:
        """Number of intervals containing t."""
        return sum(1 for b, d in self.intervals if b <= t < d)

    def persistences(self) -> np.ndarray:
        return np.asarray([d - b for b, d in self.intervals], dtype=float)


class Bifiltration:
    """The two-parameter complex of a valued point cloud."""

    def __init__(
        self,
        by_dim: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]],
        t_max: float,
        value_range: tuple[float, float],
        dims: int,
    ):
        self._by_dim = by_dim
        self.t_max = float(t_max)
        self.value_range = value_range
        self.dims = dims

    def __len__(self) -> int:
        return sum(len(t) for _, t, _ in self._by_dim.values())

    def dim_counts(self) -> dict[int, int]:
        return {d: len(t) for d, (_, t, _) in self._by_dim.items()}

    def simplices(self) -> Iterator[Simplex]:
        entries = []
        for d in sorted(self._by_dim):
            verts, t, tau = self._by_dim[d]
            for row, ti, taui in zip(verts, t, tau):
                entries.append(Simplex(tuple(int(x) for x in row), float(ti), float(taui)))
        entries.sort(key=lambda sp: (sp.t, sp.dim, sp.vertices))
        yield from entries


def build_bifiltration(cloud: PointCloud, t_max: float, dims: int = 2) -> Bifiltration:
    """Build the Vietoris-Rips bifiltration of a valued cloud.

    Every simplex of dimension <= dims whose diameter is <= t_max is
    included, with distance grade equal to its diameter and value grade
    equal to the max of its vertices' values.

    Raises
    ------
    ValueError
        If the cloud has no values, t_max <= 0, or dims not in {1, 2}.
    """
    if cloud.values is None:
        raise ValueError("bifiltration needs a valued cloud (per-point scalar values)")
    if t_max <= 0:
        raise ValueError(f"t_max must be positive, got {t_max}")
    if dims not in (1, 2):
        raise ValueError(f"dims must be 1 or 2, got {dims}")
    pts = cloud.points
    vals = cloud.values
    n = len(pts)

    by_dim: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
    v_verts = np.arange(n, dtype=np.int64).reshape(n, 1)
    by_dim[0] = (v_verts, np.zeros(n), vals.copy())

    dist = squareform(pdist(pts)) if n > 1 else np.zeros((1, 1))
    iu, ju = np.triu_indices(n, k=1)
    keep = dist[iu, ju] <= t_max
    ei, ej = iu[keep], ju[keep]
    e_t = dist[ei, ej]
    e_tau = np.maximum(vals[ei], vals[ej])
    e_verts = np.column_stack([ei, ej]).astype(np.int64)
    order = np.lexsort((e_verts[:, 1], e_verts[:, 0], e_t))
    by_dim[1] = (e_verts[order], e_t[order], e_tau[order])

    if dims == 2:
        tri_rows = []
        tri_t = []
        tri_tau = []
        for a, b, dab in zip(ei, ej, e_t):
            if b + 1 >= n:
                continue
            da = dist[a, b + 1 :]
            db = dist[b, b + 1 :]
            ks = np.nonzero((da <= t_max) & (db <= t_max))[0] + b + 1
            if not len(ks):
                continue
            t3 = np.maximum(dab, np.maximum(dist[a, ks], dist[b, ks]))
            tri_rows.append(np.column_stack([np.full(len(ks), a), np.full(len(ks), b), ks]))
            tri_t.append(t3)
            tri_tau.append(np.maximum(np.maximum(vals[a], vals[b]), vals[ks]))
        if tri_rows:
            t_verts = np.concatenate(tri_rows).astype(np.int64)
            t_t = np.concatenate(tri_t)
            t_tau = np.concatenate(tri_tau)
        else:
            t_verts = np.empty((0, 3), dtype=np.int64)
            t_t = np.empty(0)
            t_tau = np.empty(0)
        order = np.lexsort((t_verts[:, 2], t_verts[:, 1], t_verts[:, 0], t_t))
        by_dim[2] = (t_verts[order], t_t[order], t_tau[order])

    vmin = float(vals.min())
    vmax = float(vals.max())
    return Bifiltration(by_dim, t_max, (vmin, vmax), dims)


def restrict(bifilt: Bifiltration, tau: float) -> Filtration:
    """The one-parameter filtration of simplices with value grade <= tau."""
    by_dim: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for d, (verts, t, vtau) in bifilt._by_dim.items():
        mask = vtau <= tau
        by_dim[d] = (verts[mask], t[mask])
    return Filtration(by_dim, validated=True)


def _reduce_columns(columns: list[int]) -> tuple[dict[int, int], list[int]]:
    """Left-to-right GF(2) column reduction.

    Columns are bitmask ints over rows.  Returns the pivot map
    (row -> column index) and the indices of columns that reduced to zero.
    """
    pivot_of_row: dict[int, int] = {}
    stored: dict[int, int] = {}
    zero_cols: list[int] = []
    for j, col in enumerate(columns):
        while col:
            low = col.bit_length() - 1
            k = pivot_of_row.get(low)
            if k is None:
                break
            col ^= stored[k]
        if col:
            pivot_of_row[col.bit_length() - 1] = j
            stored[j] = col
        else:
            zero_cols.append(j)
    return pivot_of_row, zero_cols


def _edge_positions(edges: np.ndarray, n_vertex_ids: int) -> np.ndarray:
    """Sortable codes for edges so triangle boundaries can be located."""
    return edges[:, 0].astype(np.int64) * n_vertex_ids + edges[:, 1]


def compute_barcode(filtration: Filtration, p: int) -> Barcode:
    """Persistence barcode in degree p by boundary-matrix reduction.

    Zero-length intervals are dropped.  Degree p must be 0 or 1.

    Raises
    ------
    ValueError
        If p is out of range or the filtration is unsorted, has duplicate
        simplices, or is not face-closed.
    """
    if p not in (0, 1):
        raise ValueError(f"homology degree must be 0 or 1, got {p}")
    filtration._validate()

    v_verts, v_t = filtration.dim_arrays(0)
    e_verts, e_t = filtration.dim_arrays(1)
    intervals: list[tuple[float, float]] = []

    if p == 0:
        if len(v_verts) == 0:
            return Barcode(0, ())
        vertex_row = {int(v): row for row, v in enumerate(v_verts[:, 0])}
        cols = [(1 << vertex_row[int(u)]) | (1 << vertex_row[int(v)]) for u, v in e_verts]
        pivots, _ = _reduce_columns(cols)
        for row, j in pivots.items():
            birth, death = float(v_t[row]), float(e_t[j])
            if death > birth:
                intervals.append((birth, death))
        for row in range(len(v_verts)):
            if row not in pivots:
                intervals.append((float(v_t[row]), math.inf))
        intervals.sort(key=lambda bd: (bd[0], bd[1]))
        return Barcode(0, tuple(intervals))

    t_verts, t_t = filtration.dim_arrays(2)
    if len(e_verts) == 0:
        return Barcode(1, ())
    n_ids = int(max(v_verts[:, 0].max(initial=0), e_verts.max())) + 1
    e_codes = _edge_positions(e_verts, n_ids)
    code_order = np.argsort(e_codes, kind="stable")
    sorted_codes = e_codes[code_order]

    def edge_rows(pairs: np.ndarray) -> np.ndarray:
        codes = pairs[:, 0].astype(np.int64) * n_ids + pairs[:, 1]
        found = np.searchsorted(sorted_codes, codes)
        if np.any(found >= len(sorted_codes)) or np.any(sorted_codes[found] != codes):
            raise ValueError("triangle references an edge missing from the filtration")
        return code_order[found]

    paired_edges: set[int] = set()
    if len(t_verts):
        rows01 = edge_rows(t_verts[:, [0, 1]])
        rows12 = edge_rows(t_verts[:, [1, 2]])
        rows02 = edge_rows(t_verts[:, [0, 2]])
        cols = [
            (1 << int(a)) | (1 << int(b)) | (1 << int(c))
            for a, b, c in zip(rows01, rows12, rows02)
        ]
        pivots2, _ = _reduce_columns(cols)
        for row, j in pivots2.items():
            paired_edges.add(row)
            birth, death = float(e_t[row]), float(t_t[j])
            if death > birth:
                intervals.append((birth, death))

    # Remaining creators show up as zero columns of the edge boundary;
    # edges already paired with a triangle are skipped (clearing).
    vertex_row = {int(v): row for row, v in enumerate(v_verts[:, 0])}
    pivot_of_row: dict[int, int] = {}
    stored: dict[int, int] = {}
    for j, (u, v) in enumerate(e_verts):
        if j in paired_edges:
            continue
        col = (1 << vertex_row[int(u)]) | (1 << vertex_row[int(v)])
        while col:
            low = col.bit_length() - 1
            k = pivot_of_row.get(low)
            if k is None:
                break
            col ^= stored[k]
        if col:
            pivot_of_row[col.bit_length() - 1] = j
            stored[j] = col
        else:
            intervals.append((float(e_t[j]), math.inf))
    intervals.sort(key=lambda bd: (bd[0], bd[1]))
    return Barcode(1, tuple(intervals))


def betti(filtration: Filtration, p: int, t: float) -> int:
    """Betti number at grade t: barcode intervals containing t."""
    return compute_barcode(filtration, p).count_at(t)


@dataclass(frozen=True)
class GridSpec:
    """A uniform grid of grades over [t_lo, t_hi] x [tau_lo, tau_hi].

    Cell (i, j) covers [t_lo + i dt, t_lo + (i+1) dt) x [tau_lo + j dtau,
    tau_lo + (j+1) dtau); its grade is the lower-left corner.
    """

    t_range: tuple[float, float]
    tau_range: tuple[float, float]
    n_t: int
    n_tau: int

    def __post_init__(self):
        if self.n_t < 1 or self.n_tau < 1:
            raise ValueError("grid needs at least one cell per axis")
        if not (self.t_range[1] > self.t_range[0]) or not (
            self.tau_range[1] > self.tau_range[0]
        ):
            raise ValueError("grid ranges must have positive extent")
        if self.t_range[0] < 0:
            raise ValueError("distance grades start at 0")

    @property
    def dt(self) -> float:
        return (self.t_range[1] - self.t_range[0]) / self.n_t

    @property
    def dtau(self) -> float:
        return (self.tau_range[1] - self.tau_range[0]) / self.n_tau

    @property
    def t_grades(self) -> np.ndarray:
        return self.t_range[0] + np.arange(self.n_t) * self.dt

    @property
    def tau_grades(self) -> np.ndarray:
        return self.tau_range[0] + np.arange(self.n_tau) * self.dtau

    @property
    def cell_area(self) -> float:
        return self.dt * self.dtau

    @property
    def diagonal(self) -> float:
        return float(
            np.hypot(self.t_range[1] - self.t_range[0], self.tau_range[1] - self.tau_range[0])
        )


DEFAULT_GRID = GridSpec(t_range=(0.0, 40.0), tau_range=(-0.5, 0.5), n_t=20, n_tau=20)


@dataclass(frozen=True)
class HilbertFunction:
    """Betti numbers of one degree sampled on a grade grid."""

    degree: int
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.int64)
        if vals.shape != (self.grid.n_t, self.grid.n_tau):
            raise ValueError(
                f"values must be ({self.grid.n_t}, {self.grid.n_tau}), got {vals.shape}"
            )
        object.__setattr__(self, "values", vals)


def hilbert_function(bifilt: Bifiltration, p: int, grid: GridSpec) -> HilbertFunction:
    """Sample the degree-p Hilbert function of a bifiltration on a grid.

    Each grid column fixes a value grade tau; the restricted filtration's
    barcode then gives the Betti number at every distance grade of the
    column in one reduction.

    Raises
    ------
    ValueError
        If the grid's distance range exceeds the bifiltration's t_max.
    """
    if grid.t_range[1] > bifilt.t_max + 1e-9:
        raise ValueError(
            f"grid distance range {grid.t_range} exceeds bifiltration t_max {bifilt.t_max}"
        )
    t_grades = grid.t_grades
    values = np.zeros((grid.n_t, grid.n_tau), dtype=np.int64)
    for j, tau in enumerate(grid.tau_grades):
        barcode = compute_barcode(restrict(bifilt, float(tau)), p)
        if not barcode.intervals:
            continue
        births = np.sort([b for b, _ in barcode.intervals])
        deaths = np.sort([d for _, d in barcode.intervals if math.isfinite(d)])
        values[:, j] = np.searchsorted(births, t_grades, side="right") - np.searchsorted(
            deaths, t_grades, side="right"
        )
    return HilbertFunction(p, grid, values)


def write_barcode_csv(barcodes: Iterable[Barcode] | Barcode, path) -> None:
    """Write barcodes as CSV rows degree,birth,death with inf for open ends."""
    if isinstance(barcodes, Barcode):
        barcodes = [barcodes]
    rows = []
    for bc in barcodes:
        for b, d in bc.intervals:
            rows.append((bc.degree, b, d))
    rows.sort()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("degree,birth,death\n")
        for deg, b, d in rows:
            death = "inf" if math.isinf(d) else f"{d:.17g}"
            fh.write(f"{deg},{b:.17g},{death}\n")


def read_barcode_csv(path) -> list[Barcode]:
    by_degree: dict[int, list[tuple[float, float]]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "degree,birth,death":
            raise ValueError(f"{path}: unexpected barcode header {header!r}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            deg_s, b_s, d_s = line.split(",")
            death = math.inf if d_s == "inf" else float(d_s)
            by_degree.setdefault(int(deg_s), []).append((float(b_s), death))
    return [
        Barcode(deg, tuple(sorted(iv, key=lambda bd: (bd[0], bd[1]))))
        for deg, iv in sorted(by_degree.items())
    ]


def write_hilbert_csv(hf: HilbertFunction, path) -> None:
    """Write a Hilbert function as a CSV grid with grade headers.

    The first line records the degree and grid ranges; the header row
    lists the distance grades and the header column the value grades.
    """
    g = hf.grid
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            f"degree,{hf.degree},{g.t_range[0]:.17g},{g.t_range[1]:.17g},"
            f"{g.tau_range[0]:.17g},{g.tau_range[1]:.17g}\n"
        )
        fh.write("tau/t," + ",".join(f"{t:.17g}" for t in g.t_grades) + "\n")
        for j, tau in enumerate(g.tau_grades):
            fh.write(f"{tau:.17g}," + ",".join(str(int(v)) for v in hf.values[:, j]) + "\n")


def read_hilbert_csv(path) -> HilbertFunction:
    with open(path, "r", encoding="utf-8") as fh:
        meta = fh.readline().strip().split(",")
        if len(meta) != 6 or meta[0] != "degree":
            raise ValueError(f"{path}: unexpected Hilbert header")
        degree = int(meta[1])
        t_range = (float(meta[2]), float(meta[3]))
        tau_range = (float(meta[4]), float(meta[5]))
        header = fh.readline().strip().split(",")
        n_t = len(header) - 1
        rows = [line.strip().split(",") for line in fh if line.strip()]
    n_tau = len(rows)
    grid = GridSpec(t_range, tau_range, n_t, n_tau)
    values = np.zeros((n_t, n_tau), dtype=np.int64)
    for j, row in enumerate(rows):
        values[:, j] = [int(x) for x in row[1:]]
    return HilbertFunction(degree, grid, values)
