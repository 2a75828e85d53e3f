"""Topological and elastic shape comparison for labeled 3D surface scans.

The package computes, for each subject, either a two-parameter
persistent-homology descriptor (a dimension function over a scale and
value grid) or a family of elastic level curves, turns pairwise
descriptor comparisons into distance matrices, and runs permutation
tests, multidimensional scaling, and nearest-neighbor classification
on them.  A synthetic-data generator and a pipeline CLI make the whole
chain runnable without any clinical data.
"""

from .contours import (
    FacialCurves,
    default_levels,
    extract_level_curves,
    read_curves_csv,
    resample_curve,
    write_curves_csv,
    write_geodesic_csv,
)
from .elastic import ShapeDistanceReport, face_distance, shape_distance
from .errors import (
    ConfigError,
    ConvergenceError,
    DataError,
    StlParseError,
    ToposhapeError,
)
from .mesh import (
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
from .metrics import (
    DistanceMatrix,
    hausdorff,
    l2_distance,
    pairwise_matrix,
    read_distance_csv,
    sublevel_hausdorff,
    write_distance_csv,
)
from .persistence import (
    Barcode,
    Bifiltration,
    Filtration,
    GridSpec,
    HilbertFunction,
    Simplex,
    betti,
    build_bifiltration,
    compute_barcode,
    hilbert_function,
    read_barcode_csv,
    read_hilbert_csv,
    restrict,
    write_barcode_csv,
    write_hilbert_csv,
)
from .pipeline import (
    PipelineConfig,
    RunArtifacts,
    Subject,
    ingest_summary,
    load_config,
    load_subjects,
    render_plots,
    run_pipeline,
)
from .plots import (
    plot_barcode,
    plot_distance_heatmap,
    plot_hilbert_heatmap,
    plot_mds_scatter,
)
from .shape import (
    Curve,
    SrvFunction,
    closure_residual,
    group_action,
    preshape_geodesic,
    project_closed,
    srv_inner,
    srv_inverse,
    srv_transform,
)
from .stats import (
    Embedding,
    KnnReport,
    PermutationResult,
    classical_mds,
    knn_classify,
    permutation_test,
)
from .synthetic import clover_points, generate_synthetic, icosphere, make_face_mesh

__version__ = "0.1.0"

__all__ = [
    "Barcode",
    "Bifiltration",
    "ConfigError",
    "ConvergenceError",
    "Curve",
    "DataError",
    "DistanceMatrix",
    "Embedding",
    "FacialCurves",
    "Filtration",
    "GridSpec",
    "HilbertFunction",
    "KnnReport",
    "Landmarks",
    "PermutationResult",
    "PipelineConfig",
    "PointCloud",
    "RunArtifacts",
    "ShapeDistanceReport",
    "Simplex",
    "SrvFunction",
    "StlParseError",
    "Subject",
    "ToposhapeError",
    "TriMesh",
    "betti",
    "boundary_vertices",
    "build_bifiltration",
    "classical_mds",
    "closure_residual",
    "clover_points",
    "compute_barcode",
    "default_levels",
    "extract_level_curves",
    "face_distance",
    "generate_synthetic",
    "group_action",
    "hausdorff",
    "hilbert_function",
    "icosphere",
    "ingest_summary",
    "knn_classify",
    "l2_distance",
    "landmark_align",
    "load_config",
    "load_subjects",
    "load_xyz",
    "make_face_mesh",
    "mean_curvature",
    "pairwise_matrix",
    "parse_stl",
    "permutation_test",
    "plot_barcode",
    "plot_distance_heatmap",
    "plot_hilbert_heatmap",
    "plot_mds_scatter",
    "preshape_geodesic",
    "project_closed",
    "read_barcode_csv",
    "read_curves_csv",
    "read_distance_csv",
    "read_hilbert_csv",
    "render_plots",
    "resample_curve",
    "restrict",
    "run_pipeline",
    "shape_distance",
    "srv_inner",
    "srv_inverse",
    "srv_transform",
    "stratified_downsample",
    "sublevel_hausdorff",
    "write_barcode_csv",
    "write_curves_csv",
    "write_distance_csv",
    "write_geodesic_csv",
    "write_hilbert_csv",
    "write_stl_binary",
    "write_xyz",
]
