"""One-vs-rest logistic regression toolkit: trainers, evaluation and importance analysis."""

from .dataset import (
    BinaryDataset,
    LabeledDataset,
    SplitPair,
    default_wine_path,
    load_csv,
    ovr_encode,
    stratified_split,
)
from .importance import (
    CostModel,
    ImportanceReport,
    SparsityReport,
    build_importance,
    cost_benefit,
    sparsity_report,
    spearman_rho,
    top_k,
)
from .metrics import (
    ConfusionMatrix2,
    MetricsBundle,
    confusion,
    macro_average,
    metrics_from_confusion,
    wilson_interval,
)
from .ovr import OvrModel, predict, predict_proba, train_ovr
from .preprocess import Standardizer, fit_standardizer, inverse_transform, transform
from .solvers import (
    FittedBinaryModel,
    GdConfig,
    L1Config,
    ReferenceConfig,
    gd_gradient,
    mean_log_loss,
    retained_features,
    sigmoid,
    soft_threshold,
    train_gd,
    train_l1,
    train_reference,
)

__version__ = "0.1.0"

__all__ = [
    "BinaryDataset",
    "build_importance",
    "confusion",
    "ConfusionMatrix2",
    "cost_benefit",
    "CostModel",
    "default_wine_path",
    "fit_standardizer",
    "FittedBinaryModel",
    "gd_gradient",
    "GdConfig",
    "ImportanceReport",
    "inverse_transform",
    "L1Config",
    "LabeledDataset",
    "load_csv",
    "macro_average",
    "mean_log_loss",
    "metrics_from_confusion",
    "MetricsBundle",
    "ovr_encode",
    "OvrModel",
    "predict",
    "predict_proba",
    "ReferenceConfig",
    "retained_features",
    "sigmoid",
    "soft_threshold",
    "sparsity_report",
    "SparsityReport",
    "spearman_rho",
    "SplitPair",
    "Standardizer",
    "stratified_split",
    "top_k",
    "train_gd",
    "train_l1",
    "train_ovr",
    "train_reference",
    "transform",
    "wilson_interval",
]
