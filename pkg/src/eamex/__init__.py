"""Explainer-agnostic explainability metrics for tabular models."""

from eamex.core import (
    Dataset,
    FeatureImportance,
    LocalImportanceMatrix,
    PredictionSet,
    SubgroupPartition,
    Task,
    ValidationError,
    normalize_importance,
    normalize_local,
    partition_by_output,
)
from eamex.explain import (
    PdpCurve,
    compute_pdp,
    compute_pdp_curves,
    occlusion_local_importance,
    permutation_importance,
    subgroup_importances,
)
from eamex.external import (
    ExternalError,
    ExternalModel,
    ExternalModelError,
    TransportError,
    launch_external,
)
from eamex.metrics_global import (
    GlobalMetrics,
    RankAlignmentStrategy,
    alpha_importance,
    average_fluctuation,
    fluctuation_ratio,
    rank_alignment,
    spread_divergence,
    top_feature_set,
)
from eamex.metrics_local import (
    LocalMetrics,
    RankDeviationMap,
    compute_local_metrics,
    importance_ranks,
    importance_stability,
    rank_consistency,
)
from eamex.models import (
    EfficacyScores,
    ModelFitError,
    ModelHandle,
    ModelKind,
    TableLookupError,
    fit_linear,
    fit_logistic,
    fit_tree,
    precomputed_table,
    predict,
    score,
)
from eamex.radar import render_radar
from eamex.report import (
    MetricsReport,
    RunConfig,
    RunParams,
    ingest_importance_file,
    load_config_file,
    load_dataset,
    parse_config,
    render_table,
    run_suite,
)
from eamex.rng import Pcg32, RngState
from eamex.surrogate import (
    DecisionTree,
    fit_surrogate,
    performance_degradation,
    surrogate_feature_stability,
    surrogate_fidelity,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "DecisionTree",
    "EfficacyScores",
    "ExternalError",
    "ExternalModel",
    "ExternalModelError",
    "FeatureImportance",
    "GlobalMetrics",
    "LocalImportanceMatrix",
    "LocalMetrics",
    "MetricsReport",
    "ModelFitError",
    "ModelHandle",
    "ModelKind",
    "Pcg32",
    "PdpCurve",
    "PredictionSet",
    "RankAlignmentStrategy",
    "RankDeviationMap",
    "RngState",
    "RunConfig",
    "RunParams",
    "SubgroupPartition",
    "TableLookupError",
    "Task",
    "TransportError",
    "ValidationError",
    "alpha_importance",
    "average_fluctuation",
    "compute_local_metrics",
    "compute_pdp",
    "compute_pdp_curves",
    "fit_linear",
    "fit_logistic",
    "fit_surrogate",
    "fit_tree",
    "fluctuation_ratio",
    "importance_ranks",
    "importance_stability",
    "ingest_importance_file",
    "launch_external",
    "load_config_file",
    "load_dataset",
    "normalize_importance",
    "normalize_local",
    "occlusion_local_importance",
    "parse_config",
    "partition_by_output",
    "performance_degradation",
    "permutation_importance",
    "precomputed_table",
    "predict",
    "rank_alignment",
    "rank_consistency",
    "render_radar",
    "render_table",
    "run_suite",
    "score",
    "spread_divergence",
    "subgroup_importances",
    "surrogate_feature_stability",
    "surrogate_fidelity",
    "top_feature_set",
    "__version__",
]
