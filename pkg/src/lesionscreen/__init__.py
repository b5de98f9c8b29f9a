"""lesionscreen: reproducible transfer-learning pipeline and serving stack
for close-up skin-lesion screening.

Light submodules (data handling, folds, augmentation, metrics, statistics,
hyperparameter search) import quickly; model building, Grad-CAM, artifacts,
benchmarking, and serving live in submodules that pull in TensorFlow on
first import. Import those explicitly, e.g. ``from lesionscreen import
models``.
"""

__version__ = "0.1.0"

from .labels import BINARY_CLASSES, MULTICLASS_CLASSES, Task
from .manifest import (
    DatasetManifest,
    ImageRecord,
    ValidationReport,
    build_manifest,
    load_manifest,
    relabel_binary,
    validate_manifest,
    write_manifest,
)
from .preprocess import CropRect, PreprocessConfig, preprocess_file, preprocess_image
from .folds import FoldPlan, load_fold_plan, make_stratified_folds, save_fold_plan
from .augment import AugmentConfig, augment
from .heads import HeadConfig, head_param_count
from .hpo import (
    HyperbandConfig,
    SearchSpace,
    TrialConfig,
    TrialRecord,
    hyperband_schedule,
    run_hyperband,
    sample_config,
)
from .metrics import ConfusionMatrix, MetricSet, aggregate, compute_metrics, confusion
from .projection import pca_project
from . import stats

__all__ = [
    "__version__",
    "BINARY_CLASSES",
    "MULTICLASS_CLASSES",
    "Task",
    "DatasetManifest",
    "ImageRecord",
    "ValidationReport",
    "build_manifest",
    "load_manifest",
    "relabel_binary",
    "validate_manifest",
    "write_manifest",
    "CropRect",
    "PreprocessConfig",
    "preprocess_file",
    "preprocess_image",
    "FoldPlan",
    "load_fold_plan",
    "make_stratified_folds",
    "save_fold_plan",
    "AugmentConfig",
    "augment",
    "HeadConfig",
    "head_param_count",
    "HyperbandConfig",
    "SearchSpace",
    "TrialConfig",
    "TrialRecord",
    "hyperband_schedule",
    "run_hyperband",
    "sample_config",
    "ConfusionMatrix",
    "MetricSet",
    "aggregate",
    "compute_metrics",
    "confusion",
    "pca_project",
    "stats",
]
