"""Dual-branch hierarchical navigable small world index with LID-ordered
insertion and layer-skip bridges, plus an exact oracle and benchmark
harness."""

from .bench import (
    RunReport,
    accuracy_at_k,
    recall_at_k,
    run_ablation,
    run_benchmark,
    run_threshold_sweep,
)
from .errors import (
    ConfigError,
    EmptyIndexError,
    ExcludeSetExhausted,
    FormatError,
    HnswError,
    InputError,
    InvariantViolation,
)
from .graph import (
    DUAL_VARIANTS,
    LID_ORDERED_VARIANTS,
    VARIANTS,
    BranchHierarchy,
    HnswIndex,
    IndexConfig,
    SearchOutcome,
    build_index,
    jump,
    merge_topk,
)
from .io import (
    DatasetSpec,
    PRESETS,
    dataset_preset,
    generate_synthetic,
    load_assignment,
    load_bvecs,
    load_dataset,
    load_fvecs,
    load_ground_truth,
    load_index,
    load_profile,
    save_assignment,
    save_ground_truth,
    save_index,
    save_profile,
    write_bvecs,
    write_fvecs,
)
from .lid import (
    LayerAssignment,
    LidProfile,
    assign_layers,
    build_profile,
    estimate_lid,
    normalize_lids,
    random_assignment,
)
from .oracle import (
    GroundTruth,
    average_distance,
    build_ground_truth,
    exact_knn,
    exact_knn_batch,
    self_knn_distances,
)

__version__ = "0.1.0"

__all__ = [
    "BranchHierarchy",
    "ConfigError",
    "DatasetSpec",
    "DUAL_VARIANTS",
    "EmptyIndexError",
    "ExcludeSetExhausted",
    "FormatError",
    "GroundTruth",
    "HnswError",
    "HnswIndex",
    "IndexConfig",
    "InputError",
    "InvariantViolation",
    "LayerAssignment",
    "LidProfile",
    "LID_ORDERED_VARIANTS",
    "PRESETS",
    "RunReport",
    "SearchOutcome",
    "VARIANTS",
    "accuracy_at_k",
    "assign_layers",
    "average_distance",
    "build_ground_truth",
    "build_index",
    "build_profile",
    "dataset_preset",
    "estimate_lid",
    "exact_knn",
    "exact_knn_batch",
    "generate_synthetic",
    "jump",
    "load_assignment",
    "load_bvecs",
    "load_dataset",
    "load_fvecs",
    "load_ground_truth",
    "load_index",
    "load_profile",
    "merge_topk",
    "normalize_lids",
    "random_assignment",
    "recall_at_k",
    "run_ablation",
    "run_benchmark",
    "run_threshold_sweep",
    "save_assignment",
    "save_ground_truth",
    "save_index",
    "save_profile",
    "self_knn_distances",
    "write_bvecs",
    "write_fvecs",
]
