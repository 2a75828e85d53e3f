"""End-to-end orchestration: config parsing, branch execution, artifacts.

A run loads a labeled dataset of surface scans (STL meshes or XYZ
clouds), computes one or more distance matrices between subjects, and
emits CSV/JSON artifacts plus SVG figures into an output directory.
Three branches are available:

ph-curvature
    mesh -> mean curvature -> stratified downsample -> Rips
    bifiltration -> degree-0 dimension function -> grid L2 and
    sublevel-Hausdorff distances.
ph-curves
    mesh -> nose-distance level curves -> pooled points valued by
    height -> Rips bifiltration -> degree-1 dimension function ->
    grid L2 and sublevel-Hausdorff distances.
shape-geodesic
    mesh -> level curves -> per-level elastic shape distances ->
    product combination (a sum-of-squares combination is emitted
    alongside as a diagnostic).

Every matrix then gets a permutation test, an MDS embedding, and a
nearest-neighbor report.  All compute happens before the first byte is
written, so a failing run leaves no partial outputs.  Identical config
and inputs reproduce every output byte for byte.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .contours import (
    FacialCurves,
    extract_level_curves,
    resample_curve,
)
from .elastic import shape_distance
from .errors import ConfigError, ConvergenceError, DataError
from .mesh import (
    Landmarks,
    PointCloud,
    TriMesh,
    landmark_align,
    load_xyz,
    mean_curvature,
    parse_stl,
    stratified_downsample,
)
from .metrics import (
    DistanceMatrix,
    l2_distance,
    pairwise_matrix,
    read_distance_csv,
    sublevel_hausdorff,
    write_distance_csv,
)
from .persistence import (
    Barcode,
    GridSpec,
    HilbertFunction,
    build_bifiltration,
    compute_barcode,
    hilbert_function,
    read_barcode_csv,
    read_hilbert_csv,
    restrict,
    write_barcode_csv,
    write_hilbert_csv,
)
from .plots import (
    plot_barcode,
    plot_distance_heatmap,
    plot_hilbert_heatmap,
    plot_mds_scatter,
)
from .stats import (
    classical_mds,
    knn_classify,
    permutation_test,
    write_permutation_csv,
    write_permutation_json,
)

BRANCHES = ("ph-curvature", "ph-curves", "shape-geodesic")
VALID_LABELS = ("no-risk", "risk")
METRIC_NAMES = ("l2", "hausdorff")


@dataclass(frozen=True)
class PipelineConfig:
    """Effective settings of one pipeline run.

    All numeric invariants are checked on construction; violations
    raise ConfigError so the CLI can map them to its config exit code.
    """

    dataset_dir: str = ""
    labels_file: str = ""
    landmarks_file: str = ""
    output_dir: str = "output"
    branch: str = "all"
    seed: int = 0
    downsample_n: int = 300
    t_max: float = 40.0
    grid_n_t: int = 20
    grid_n_tau: int = 20
    grid_tau_lo: float = -0.5
    grid_tau_hi: float = 0.5
    curvature_clamp: float = 0.5
    curve_count: int = 6
    curve_level_lo: float = 12.0
    curve_level_hi: float = 30.0
    samples_per_curve: int = 128
    curves_t_max: float = 25.0
    curves_grid_tau_lo: float = -40.0
    curves_grid_tau_hi: float = 40.0
    metrics: str = "l2,hausdorff"
    n_perm: int = 1000
    statistic: str = "mean"
    holdout: float = 0.2
    knn_k: int = 3
    mds_dim: int = 2

    def __post_init__(self):
        if self.branch not in BRANCHES + ("all",):
            raise ConfigError(
                f"branch must be one of {BRANCHES + ('all',)}, got {self.branch!r}"
            )
        for key in (
            "downsample_n", "t_max", "grid_n_t", "grid_n_tau", "curvature_clamp",
            "curve_count", "samples_per_curve", "curves_t_max", "n_perm",
            "knn_k", "mds_dim",
        ):
            if getattr(self, key) <= 0:
                raise ConfigError(f"{key} must be positive, got {getattr(self, key)}")
        if not 0.0 < self.holdout < 1.0:
            raise ConfigError(f"holdout must be in (0, 1), got {self.holdout}")
        if self.knn_k % 2 == 0:
            raise ConfigError(f"knn_k must be odd, got {self.knn_k}")
        if self.statistic not in ("mean", "median"):
            raise ConfigError(f"statistic must be mean or median, got {self.statistic!r}")
        if self.grid_tau_hi <= self.grid_tau_lo:
            raise ConfigError("grid_tau_hi must exceed grid_tau_lo")
        if self.curves_grid_tau_hi <= self.curves_grid_tau_lo:
            raise ConfigError("curves_grid_tau_hi must exceed curves_grid_tau_lo")
        if self.curve_level_hi <= self.curve_level_lo:
            raise ConfigError("curve_level_hi must exceed curve_level_lo")
        if self.samples_per_curve < 8:
            raise ConfigError(f"samples_per_curve must be >= 8, got {self.samples_per_curve}")
        for m in self.metric_list:
            if m not in METRIC_NAMES:
                raise ConfigError(f"unknown metric {m!r}, choose from {METRIC_NAMES}")
        if not self.metric_list:
            raise ConfigError("metrics must name at least one metric")

    @property
    def metric_list(self) -> tuple[str, ...]:
        return tuple(m.strip() for m in self.metrics.split(",") if m.strip())

    @property
    def branches(self) -> tuple[str, ...]:
        return BRANCHES if self.branch == "all" else (self.branch,)

    def resolved(self) -> "PipelineConfig":
        """Fill in labels/landmarks defaults relative to dataset_dir."""
        updates = {}
        if not self.labels_file and self.dataset_dir:
            updates["labels_file"] = str(Path(self.dataset_dir) / "labels.csv")
        if not self.landmarks_file and self.dataset_dir:
            updates["landmarks_file"] = str(Path(self.dataset_dir) / "landmarks.csv")
        return dataclasses.replace(self, **updates) if updates else self


_INT_KEYS = {
    "seed", "downsample_n", "grid_n_t", "grid_n_tau", "curve_count",
    "samples_per_curve", "n_perm", "knn_k", "mds_dim",
}
_FLOAT_KEYS = {
    "t_max", "grid_tau_lo", "grid_tau_hi", "curvature_clamp",
    "curve_level_lo", "curve_level_hi", "curves_t_max",
    "curves_grid_tau_lo", "curves_grid_tau_hi", "holdout",
}
_PATH_KEYS = {"dataset_dir", "labels_file", "landmarks_file", "output_dir"}
_STR_KEYS = {"branch", "metrics", "statistic"}
_ALL_KEYS = _INT_KEYS | _FLOAT_KEYS | _PATH_KEYS | _STR_KEYS


def load_config(path) -> PipelineConfig:
    """Parse a flat key = value config file.

    Blank lines and lines starting with # are ignored.  Relative paths
    are resolved against the config file's directory, so a config can be
    invoked from anywhere.

    Raises
    ------
    ConfigError
        On unreadable file, unknown or duplicate keys, or bad values.
    """
    cfg_path = Path(path)
    try:
        text = cfg_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    base = cfg_path.parent
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}: line {lineno} is not key = value: {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _ALL_KEYS:
            raise ConfigError(f"{path}: unknown key {key!r} at line {lineno}")
        if key in values:
            raise ConfigError(f"{path}: duplicate key {key!r} at line {lineno}")
        if key in _INT_KEYS:
            try:
                values[key] = int(val)
            except ValueError:
                raise ConfigError(f"{path}: {key} needs an integer, got {val!r}") from None
        elif key in _FLOAT_KEYS:
            try:
                values[key] = float(val)
            except ValueError:
                raise ConfigError(f"{path}: {key} needs a number, got {val!r}") from None
        elif key in _PATH_KEYS:
            values[key] = str(base / val) if not Path(val).is_absolute() else val
        else:
            values[key] = val
    if "dataset_dir" not in values:
        raise ConfigError(f"{path}: dataset_dir is required")
    if "output_dir" not in values:
        values["output_dir"] = str(base / "output")
    return PipelineConfig(**values).resolved()


@dataclass(frozen=True)
class Subject:
    """One labeled scan: a mesh or a point cloud, plus optional landmarks."""

    subject_id: str
    label: str
    mesh: TriMesh | None = None
    cloud: PointCloud | None = None
    landmarks: Landmarks | None = None


@dataclass(frozen=True)
class RunArtifacts:
    """What a pipeline run produced."""

    output_dir: str
    files: tuple[str, ...]
    hashes: dict
    p_values: dict
    knn_accuracy: dict


def _read_csv_rows(path, expected_header: str, n_fields: int) -> list[list[str]]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != expected_header:
        raise DataError(f"{path}: expected header {expected_header!r}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != n_fields:
            raise DataError(f"{path}: line {lineno} has {len(parts)} fields, expected {n_fields}")
        rows.append(parts)
    return rows


def load_subjects(config: PipelineConfig) -> list[Subject]:
    """Load the labeled dataset described by the config.

    Subjects are ordered by (label, id) so that groups are contiguous in
    every matrix.  Each subject must have subjects/<id>.stl or
    subjects/<id>.xyz under dataset_dir (or directly in dataset_dir);
    mesh and cloud subjects cannot be mixed.

    Raises
    ------
    DataError
        On missing/malformed labels, missing scan files (all offending
        subject IDs listed), bad label values, or fewer than two groups.
    """
    config = config.resolved()
    if not Path(config.labels_file).exists():
        raise DataError(f"labels file does not exist: {config.labels_file}")
    rows = _read_csv_rows(config.labels_file, "subject_id,label", 2)
    if not rows:
        raise DataError(f"{config.labels_file}: no subjects listed")
    labels: dict[str, str] = {}
    for sid, label in rows:
        if sid in labels:
            raise DataError(f"{config.labels_file}: duplicate subject_id {sid!r}")
        if label not in VALID_LABELS:
            raise DataError(
                f"{config.labels_file}: label for {sid} must be one of {VALID_LABELS}, got {label!r}"
            )
        labels[sid] = label
    if len(set(labels.values())) != 2:
        raise DataError(
            f"{config.labels_file}: need both labels {VALID_LABELS}, got {sorted(set(labels.values()))}"
        )

    roots = [Path(config.dataset_dir) / "subjects", Path(config.dataset_dir)]
    found: dict[str, Path] = {}
    missing = []
    for sid in labels:
        for root in roots:
            for ext in (".stl", ".xyz"):
                cand = root / f"{sid}{ext}"
                if cand.exists():
                    found[sid] = cand
                    break
            if sid in found:
                break
        if sid not in found:
            missing.append(sid)
    if missing:
        raise DataError(f"missing scan file for subjects: {', '.join(sorted(missing))}")
    exts = {p.suffix for p in found.values()}
    if len(exts) > 1:
        raise DataError(f"dataset mixes scan formats {sorted(exts)}; use one of .stl or .xyz")

    landmark_map: dict[str, Landmarks] = {}
    if Path(config.landmarks_file).exists():
        lrows = _read_csv_rows(
            config.landmarks_file, "subject_id,nose_idx,left_eye_idx,right_eye_idx", 4
        )
        for sid, nose, left, right in lrows:
            try:
                landmark_map[sid] = Landmarks(int(nose), int(left), int(right))
            except ValueError as exc:
                raise DataError(f"{config.landmarks_file}: subject {sid}: {exc}") from exc

    subjects = []
    for sid in sorted(labels, key=lambda s: (labels[s], s)):
        path = found[sid]
        if path.suffix == ".stl":
            try:
                mesh = parse_stl(path.read_bytes())
            except DataError as exc:
                raise DataError(f"subject {sid}: {path}: {exc}") from exc
            subjects.append(
                Subject(sid, labels[sid], mesh=mesh, landmarks=landmark_map.get(sid))
            )
        else:
            subjects.append(Subject(sid, labels[sid], cloud=load_xyz(path)))
    return subjects


def _stage(subject_id: str, stage: str, exc: Exception) -> Exception:
    """Re-wrap a module error with subject and stage context."""
    msg = f"subject {subject_id}, stage {stage}: {exc}"
    if isinstance(exc, ConvergenceError):
        return ConvergenceError(msg)
    return DataError(msg)


def _subject_seed(config: PipelineConfig, index: int) -> int:
    return config.seed * 100003 + index


def _curvature_descriptor(
    subject: Subject, index: int, config: PipelineConfig, grid: GridSpec
) -> tuple[HilbertFunction, Barcode]:
    try:
        if subject.mesh is not None:
            values = mean_curvature(subject.mesh, clamp=config.curvature_clamp)
            cloud = PointCloud(subject.mesh.vertices, values)
        else:
            cloud = subject.cloud
            if cloud.values is None:
                raise ValueError("cloud has no per-point values; curvature branch needs them")
        down = stratified_downsample(cloud, config.downsample_n, _subject_seed(config, index))
        # Degree 0 never needs triangles.
        bifilt = build_bifiltration(down, t_max=config.t_max, dims=1)
        hf = hilbert_function(bifilt, 0, grid)
        barcode = compute_barcode(restrict(bifilt, bifilt.value_range[1]), 0)
        return hf, barcode
    except (ValueError, DataError, ConvergenceError) as exc:
        raise _stage(subject.subject_id, "ph-curvature", exc) from exc


def _level_curves(subject: Subject, config: PipelineConfig) -> FacialCurves:
    """Extract and resample the nose-distance level curves of one mesh."""
    if subject.mesh is None:
        raise ValueError("level curves need a triangulated mesh, got a point cloud")
    if subject.landmarks is None:
        raise ValueError("no landmarks; level curves need nose and eye indices")
    aligned = landmark_align(subject.mesh, subject.landmarks)
    nose = aligned.vertices[subject.landmarks.nose]
    field = np.linalg.norm(aligned.vertices - nose, axis=1)
    levels = np.linspace(config.curve_level_lo, config.curve_level_hi, config.curve_count)
    curves = extract_level_curves(aligned, field, levels)
    resampled = tuple(resample_curve(c, config.samples_per_curve) for c in curves.curves)
    return FacialCurves(resampled, curves.level_values)


def _curves_descriptor(
    subject: Subject, index: int, config: PipelineConfig, grid: GridSpec
) -> tuple[HilbertFunction, Barcode]:
    try:
        curves = _level_curves(subject, config)
        points = np.vstack([c.points for c in curves.curves])
        # Height above the eye line is the value grade.
        cloud = PointCloud(points, points[:, 1].copy())
        down = stratified_downsample(cloud, config.downsample_n, _subject_seed(config, index))
        bifilt = build_bifiltration(down, t_max=config.curves_t_max, dims=2)
        hf = hilbert_function(bifilt, 1, grid)
        barcode = compute_barcode(restrict(bifilt, bifilt.value_range[1]), 1)
        return hf, barcode
    except (ValueError, DataError, ConvergenceError) as exc:
        raise _stage(subject.subject_id, "ph-curves", exc) from exc


def _geodesic_curves(subjects: list[Subject], config: PipelineConfig) -> list[FacialCurves]:
    bundles = []
    for subject in subjects:
        try:
            bundles.append(_level_curves(subject, config))
        except (ValueError, DataError) as exc:
            raise _stage(subject.subject_id, "shape-geodesic", exc) from exc
    for li in range(config.curve_count):
        kinds = {b.curves[li].kind for b in bundles}
        if len(kinds) > 1:
            level = bundles[0].level_values[li]
            raise DataError(
                f"stage shape-geodesic: level {level:g} yields open curves for some "
                f"subjects and closed for others; adjust curve_level_lo/hi"
            )
    return bundles


def _geodesic_matrices(
    subjects: list[Subject], config: PipelineConfig
) -> tuple[DistanceMatrix, DistanceMatrix]:
    """Product-combined shape distances plus the sum-of-squares diagnostic."""
    bundles = _geodesic_curves(subjects, config)
    n = len(subjects)
    prod = np.zeros((n, n))
    sumsq = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            dists = []
            for li in range(config.curve_count):
                try:
                    report = shape_distance(
                        bundles[i].curves[li],
                        bundles[j].curves[li],
                        n_samples=config.samples_per_curve,
                    )
                except (ValueError, ConvergenceError) as exc:
                    raise _stage(
                        f"{subjects[i].subject_id} vs {subjects[j].subject_id}",
                        f"shape-geodesic level {bundles[i].level_values[li]:g}",
                        exc,
                    ) from exc
                dists.append(report.distance)
            prod[i, j] = prod[j, i] = float(np.prod(dists))
            sumsq[i, j] = sumsq[j, i] = float(math.sqrt(sum(d * d for d in dists)))
    ids = tuple(s.subject_id for s in subjects)
    labels = tuple(s.label for s in subjects)
    return (
        DistanceMatrix(ids, labels, prod),
        DistanceMatrix(ids, labels, sumsq),
    )


def _exemplar_indices(subjects: list[Subject]) -> list[int]:
    """Index of the first subject of each label, in subject order."""
    seen = set()
    picks = []
    for i, s in enumerate(subjects):
        if s.label not in seen:
            seen.add(s.label)
            picks.append(i)
    return picks


def run_pipeline(config: PipelineConfig) -> RunArtifacts:
    """Execute the configured branches and write all artifacts.

    Per branch: distance matrix CSVs (one per metric), a permutation
    test JSON + null-statistics CSV, MDS coordinates CSV, a k-NN report
    JSON, and per-group exemplar barcode/dimension-function CSVs.  SVG
    figures are rendered from the emitted CSVs, and manifest.json maps
    every output file to its SHA-256 hash.

    All computation precedes all writes: a raised error leaves the
    output directory untouched.

    Raises
    ------
    ConfigError
        For invalid settings or an unwritable output directory.
    DataError
        For missing/malformed inputs, with subject and stage context.
    ConvergenceError
        If an iterative solve fails irrecoverably.
    """
    config = config.resolved()
    if not config.dataset_dir:
        raise ConfigError("dataset_dir is required")
    subjects = load_subjects(config)
    ids = tuple(s.subject_id for s in subjects)
    labels = tuple(s.label for s in subjects)
    exemplars = _exemplar_indices(subjects)

    # Phase 1: compute everything in memory.
    matrices: list[tuple[str, DistanceMatrix]] = []
    diagnostics: list[tuple[str, DistanceMatrix]] = []
    barcode_files: list[tuple[str, list[Barcode]]] = []
    hilbert_files: list[tuple[str, HilbertFunction]] = []

    for branch in config.branches:
        if branch == "shape-geodesic":
            dm, dm_sumsq = _geodesic_matrices(subjects, config)
            matrices.append(("shape-geodesic", dm))
            diagnostics.append(("shape-geodesic-sumsq", dm_sumsq))
            continue
        if branch == "ph-curvature":
            grid = GridSpec(
                (0.0, config.t_max), (config.grid_tau_lo, config.grid_tau_hi),
                config.grid_n_t, config.grid_n_tau,
            )
            compute = _curvature_descriptor
        else:
            grid = GridSpec(
                (0.0, config.curves_t_max),
                (config.curves_grid_tau_lo, config.curves_grid_tau_hi),
                config.grid_n_t, config.grid_n_tau,
            )
            compute = _curves_descriptor
        hfs = []
        for i, subject in enumerate(subjects):
            hf, barcode = compute(subject, i, config, grid)
            hfs.append(hf)
            if i in exemplars:
                sid = subject.subject_id
                barcode_files.append((f"barcode-{branch}-{sid}.csv", [barcode]))
                hilbert_files.append((f"hilbert-{branch}-{sid}.csv", hf))
        for metric_name in config.metric_list:
            metric = l2_distance if metric_name == "l2" else sublevel_hausdorff
            dm = pairwise_matrix(hfs, metric, ids, labels)
            matrices.append((f"{branch}-{metric_name}", dm))

    p_values = {}
    knn_accuracy = {}
    stats_results = []
    for name, dm in matrices:
        try:
            perm = permutation_test(
                dm, n_perm=config.n_perm, seed=config.seed, statistic=config.statistic
            )
            emb = classical_mds(dm, min(config.mds_dim, dm.n))
            knn = knn_classify(dm, k=config.knn_k, holdout=config.holdout, seed=config.seed)
        except ValueError as exc:
            raise DataError(f"stage statistics for {name}: {exc}") from exc
        stats_results.append((name, perm, emb, knn))
        p_values[name] = perm.p_value
        knn_accuracy[name] = knn.accuracy

    # Phase 2: emit.
    out = Path(config.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-probe"
        probe.write_bytes(b"")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"output_dir {config.output_dir} is not writable: {exc}") from exc

    writers: dict = {}
    for name, dm in matrices + diagnostics:
        writers[f"distance-{name}.csv"] = (write_distance_csv, dm)
    for fname, barcodes in barcode_files:
        writers[fname] = (write_barcode_csv, barcodes)
    for fname, hf in hilbert_files:
        writers[fname] = (write_hilbert_csv, hf)
    for name, perm, emb, knn in stats_results:
        writers[f"permutation-{name}.json"] = (write_permutation_json, perm)
        writers[f"permutation-null-{name}.csv"] = (write_permutation_csv, perm)
        writers[f"mds-{name}.csv"] = (_write_mds_csv, (emb, ids, labels))
        writers[f"knn-{name}.json"] = (_write_knn_json, (knn, config))
    for fname in sorted(writers):
        writer, payload = writers[fname]
        writer(payload, out / fname)

    svg_files = render_plots(out)
    files = sorted(writers) + [Path(p).name for p in svg_files]

    hashes = {}
    for fname in sorted(files):
        hashes[fname] = hashlib.sha256((out / fname).read_bytes()).hexdigest()
    manifest = {
        "config": {f.name: getattr(config, f.name) for f in dataclasses.fields(config)},
        "files": hashes,
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    files.append("manifest.json")

    return RunArtifacts(
        output_dir=str(out),
        files=tuple(sorted(files)),
        hashes=hashes,
        p_values=p_values,
        knn_accuracy=knn_accuracy,
    )


def _write_mds_csv(payload, path) -> None:
    emb, ids, labels = payload
    coords = emb.coordinates
    m = coords.shape[1]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("subject_id,label," + ",".join(f"coord{j + 1}" for j in range(m)) + "\n")
        for i, (sid, label) in enumerate(zip(ids, labels)):
            row = ",".join(f"{coords[i, j]:.17g}" for j in range(m))
            fh.write(f"{sid},{label},{row}\n")


def _write_knn_json(payload, path) -> None:
    knn, config = payload
    doc = {
        "accuracy": knn.accuracy,
        "per_class_recall": dict(sorted(knn.per_class_recall.items())),
        "k": knn.k,
        "holdout": config.holdout,
        "seed": knn.seed,
        "test_ids": list(knn.test_ids),
        "true_labels": list(knn.true_labels),
        "predicted_labels": list(knn.predicted_labels),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_mds_csv(path) -> tuple[np.ndarray, list[str], list[str]]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    header = lines[0].split(",")
    if header[:2] != ["subject_id", "label"]:
        raise DataError(f"{path}: unexpected MDS header")
    ids, labels, rows = [], [], []
    for line in lines[1:]:
        if not line.strip():
            continue
        parts = line.split(",")
        ids.append(parts[0])
        labels.append(parts[1])
        rows.append([float(v) for v in parts[2:]])
    return np.asarray(rows), labels, ids


def render_plots(output_dir) -> list[str]:
    """Render an SVG next to every plottable CSV in output_dir.

    Distance matrices become heatmaps with group separators, barcode
    CSVs become interval stacks, dimension-function CSVs become
    grayscale grids, and MDS CSVs become labeled scatter plots.
    Existing SVGs are overwritten.  Returns the written paths sorted.
    """
    out = Path(output_dir)
    if not out.is_dir():
        raise DataError(f"output directory does not exist: {output_dir}")
    written = []
    for csv_path in sorted(out.glob("distance-*.csv")):
        dm = read_distance_csv(csv_path)
        svg = csv_path.with_suffix(".svg")
        plot_distance_heatmap(dm, svg)
        written.append(str(svg))
    for csv_path in sorted(out.glob("barcode-*.csv")):
        barcodes = read_barcode_csv(csv_path)
        svg = csv_path.with_suffix(".svg")
        plot_barcode(barcodes, svg)
        written.append(str(svg))
    for csv_path in sorted(out.glob("hilbert-*.csv")):
        hf = read_hilbert_csv(csv_path)
        svg = csv_path.with_suffix(".svg")
        plot_hilbert_heatmap(hf, svg)
        written.append(str(svg))
    for csv_path in sorted(out.glob("mds-*.csv")):
        coords, labels, ids = _read_mds_csv(csv_path)
        svg = csv_path.with_suffix(".svg")
        plot_mds_scatter(coords, labels, ids, svg)
        written.append(str(svg))
    return sorted(written)


def rerun_tests(config: PipelineConfig) -> dict:
    """Recompute permutation tests from the distance CSVs of a finished run.

    Reads every distance-*.csv in the configured output directory and
    returns {matrix name: p-value} without writing anything.  Diagnostic
    sum-of-squares matrices are skipped, matching the run itself.
    """
    config = config.resolved()
    out = Path(config.output_dir)
    csvs = sorted(out.glob("distance-*.csv"))
    if not csvs:
        raise DataError(f"no distance matrices found in {config.output_dir}; run the pipeline first")
    results = {}
    for csv_path in csvs:
        name = csv_path.stem.removeprefix("distance-")
        if name.endswith("-sumsq"):
            continue
        dm = read_distance_csv(csv_path)
        perm = permutation_test(
            dm, n_perm=config.n_perm, seed=config.seed, statistic=config.statistic
        )
        results[name] = perm.p_value
    return results


def ingest_summary(config: PipelineConfig) -> dict:
    """Validate the dataset and summarize it without running any branch."""
    subjects = load_subjects(config.resolved())
    counts: dict[str, int] = {}
    for s in subjects:
        counts[s.label] = counts.get(s.label, 0) + 1
    kind = "mesh" if subjects[0].mesh is not None else "cloud"
    return {
        "n_subjects": len(subjects),
        "groups": counts,
        "kind": kind,
        "with_landmarks": all(s.landmarks is not None for s in subjects),
        "subject_ids": [s.subject_id for s in subjects],
    }
