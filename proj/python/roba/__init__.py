"""Rotation averaging from epipolar moments."""

from roba._core import (
    Edge,
    Error,
    ErrorReport,
    OptimizeResult,
    SimSettings,
    ViewGraph,
    align_l1,
    align_l2,
    assemble_m,
    edge_cost,
    error_report,
    exp_map,
    generate_dataset,
    geodesic_distance,
    load_graph,
    load_rotations,
    log_map,
    optimize,
    perturb_rotations,
    precompute_moments,
    random_rotation,
    recover_translation_direction,
    run_cli,
    save_graph,
    save_rotations,
    smallest_eigenvalue,
    symmetric_eigenvalues,
    total_cost,
)

__all__ = [
    "Edge",
    "Error",
    "ErrorReport",
    "OptimizeResult",
    "SimSettings",
    "ViewGraph",
    "align_l1",
    "align_l2",
    "assemble_m",
    "edge_cost",
    "error_report",
    "exp_map",
    "generate_dataset",
    "geodesic_distance",
    "load_graph",
    "load_rotations",
    "log_map",
    "optimize",
    "perturb_rotations",
    "precompute_moments",
    "random_rotation",
    "recover_translation_direction",
    "run_cli",
    "save_graph",
    "save_rotations",
    "smallest_eigenvalue",
    "symmetric_eigenvalues",
    "total_cost",
]
