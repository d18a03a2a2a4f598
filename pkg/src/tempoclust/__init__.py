"""tempoclust: multiscale clustering of event-completion time series.

Pipeline: DTW similarity kernel -> relaxed-MST graph -> Markov Stability
scan -> variation-of-information robustness selection, with isotonic
session metrics and Gaussian-process cluster characterization.
"""

from .dtw import (
    KernelConfig,
    SimilarityMatrix,
    dtw_distance,
    dtw_kernel,
    similarity_matrix,
)
from .features import (
    IsotonicFit,
    LearnerStats,
    SessionStats,
    completion_percentage,
    isotonic_fit,
    massed_sessions,
)
from .gpr import (
    BayesComparison,
    CurveResult,
    GPModel,
    bayes_factor,
    cluster_mean_trajectory,
    gp_fit,
    log_marginal_likelihood,
)
from .ingest import (
    EventLog,
    IngestError,
    TaskCatalog,
    Trajectory,
    build_trajectories,
    build_trajectory,
    parse_event_log,
    parse_task_catalog,
)
from .manifest import ManifestError, RunManifest
from .mstability import (
    LaplacianSystem,
    Partition,
    ScanConfig,
    ScanResult,
    StabilityEvaluation,
    block_autocovariance,
    build_system,
    default_time_grid,
    louvain_optimize,
    scan,
    stability,
)
from .pipeline import PipelineResult, StageError, run_pipeline, simulate
from .rmst import RmstConfig, SimGraph, knn_graph, minimum_spanning_tree, rmst_graph
from .robustness import (
    RobustScale,
    cross_time_vi,
    ensemble_vi,
    hierarchy_consistency,
    select_robust,
    variation_of_information,
)
from .synth import ArchetypeSpec, adjusted_rand_index, generate_cohort, recovery_score

__version__ = "0.1.0"

__all__ = [
    "ArchetypeSpec",
    "BayesComparison",
    "CurveResult",
    "EventLog",
    "GPModel",
    "IngestError",
    "IsotonicFit",
    "KernelConfig",
    "LaplacianSystem",
    "LearnerStats",
    "ManifestError",
    "Partition",
    "PipelineResult",
    "RmstConfig",
    "RobustScale",
    "RunManifest",
    "ScanConfig",
    "ScanResult",
    "SessionStats",
    "SimGraph",
    "SimilarityMatrix",
    "StabilityEvaluation",
    "StageError",
    "TaskCatalog",
    "Trajectory",
    "adjusted_rand_index",
    "bayes_factor",
    "block_autocovariance",
    "build_system",
    "build_trajectories",
    "build_trajectory",
    "cluster_mean_trajectory",
    "completion_percentage",
    "cross_time_vi",
    "default_time_grid",
    "dtw_distance",
    "dtw_kernel",
    "ensemble_vi",
    "generate_cohort",
    "gp_fit",
    "hierarchy_consistency",
    "isotonic_fit",
    "knn_graph",
    "log_marginal_likelihood",
    "louvain_optimize",
    "massed_sessions",
    "minimum_spanning_tree",
    "parse_event_log",
    "parse_task_catalog",
    "recovery_score",
    "rmst_graph",
    "run_pipeline",
    "scan",
    "select_robust",
    "similarity_matrix",
    "simulate",
    "stability",
    "variation_of_information",
]
