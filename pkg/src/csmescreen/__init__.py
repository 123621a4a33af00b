"""Feature-space pipeline for CSME screening.

Class balancing (SMOTE), wrapper feature selection (GA / binary PSO) around a
k-NN classifier, and ROC-based evaluation on pre-extracted feature vectors.
"""

from csmescreen.dataset import (
    FeatureFileError,
    FeatureMask,
    FoldAssignment,
    LabeledDataset,
    load_feature_file,
    project,
    save_feature_file,
    stratified_kfold,
    stratified_split,
)
from csmescreen.metrics import (
    ConfusionMatrix,
    OperatingPoint,
    RocCurve,
    auc,
    confusion,
    improvement_pi,
    operating_point_a,
    operating_point_b,
    reduction_xi,
    roc_curve,
    summary,
)
from csmescreen.neighbors import KnnConfig, knn_classify, knn_score, knn_scores
from csmescreen.oversample import OversampleConfig, smote, synthetic_count
from csmescreen.search import (
    RunResult,
    SearchConfig,
    SelectionReport,
    bpso_run,
    criterion,
    ga_run,
    multi_run_select,
)

__version__ = "0.1.0"

__all__ = [
    "ConfusionMatrix",
    "FeatureFileError",
    "FeatureMask",
    "FoldAssignment",
    "KnnConfig",
    "LabeledDataset",
    "OperatingPoint",
    "OversampleConfig",
    "RocCurve",
    "RunResult",
    "SearchConfig",
    "SelectionReport",
    "auc",
    "bpso_run",
    "confusion",
    "criterion",
    "ga_run",
    "improvement_pi",
    "knn_classify",
    "knn_score",
    "knn_scores",
    "load_feature_file",
    "multi_run_select",
    "operating_point_a",
    "operating_point_b",
    "project",
    "reduction_xi",
    "roc_curve",
    "save_feature_file",
    "smote",
    "stratified_kfold",
    "stratified_split",
    "summary",
    "synthetic_count",
]
