"""Candidate-pseudolabel learning on frozen features.

The engine turns a model's confidence matrix over an unlabeled pool into
per-instance candidate label sets (quantile-thresholded intra- and
inter-instance selection), trains a linear head against those sets with
partial-label losses, and repeats under a growing per-class curriculum.
"""
import os

# Thread caps must land in the environment before numpy first loads its BLAS;
# best effort when numpy was already imported by the embedding process.
_threads = os.environ.get("CPL_THREADS")
if _threads:
    for _var in (
        "OMP_NUM_THREADS",
        "OPENBLAS_NUM_THREADS",
        "MKL_NUM_THREADS",
        "NUMEXPR_NUM_THREADS",
    ):
        os.environ.setdefault(_var, _threads)

from .core import (
    UNLABELED,
    CandidateAssignment,
    ConfidenceMatrix,
    CurriculumState,
    DataContainer,
    DivergedError,
    LinearModel,
    NoTrainableInstancesError,
    OptimConfig,
    ParadigmSpec,
    SelectionParams,
    TrainingSet,
    sets_from_targets,
    softmax_row,
    softmax_rows,
    targets_from_sets,
)
from .dataio import (
    ContainerFormatError,
    load_container,
    load_csv,
    make_synthetic,
    save_container,
    save_csv,
)
from .losses import (
    LossKind,
    SoftTarget,
    combined_batch_loss,
    loss_cav,
    loss_cc,
    loss_lw,
    loss_rc,
    loss_soft_ce,
    loss_supervised_ce,
    make_soft_target,
    supervised_ce,
)
from .metrics import (
    ConfusionMatrix,
    avg_candidate_size,
    class_frequency,
    confusion,
    frequency_ratio,
    label_estimation_accuracy,
    per_class_accuracy,
    top1_accuracy,
)
from .model import (
    OptimizerState,
    init_model,
    load_model,
    logits_of,
    lr_at,
    predict_proba,
    reinit,
    save_model,
    sgd_step,
)
from .paradigms import (
    SplitResult,
    harmonic_mean,
    make_imbalanced,
    split_ssl,
    split_trzsl,
)
from .selection import (
    ClassThresholds,
    adaptive_threshold,
    filter_nonempty,
    generate_candidates,
    inter_select,
    inter_thresholds,
    intra_select,
    nearest_rank,
    topk_curriculum_select,
)
from .trainer import (
    IterationRecord,
    RunConfig,
    RunReport,
    compute_b1,
    fewshot_unlabeled_subsample,
    run_cpl,
)

__version__ = "0.1.0"

__all__ = [
    "UNLABELED",
    "CandidateAssignment",
    "ClassThresholds",
    "ConfidenceMatrix",
    "ConfusionMatrix",
    "ContainerFormatError",
    "CurriculumState",
    "DataContainer",
    "DivergedError",
    "IterationRecord",
    "LinearModel",
    "LossKind",
    "NoTrainableInstancesError",
    "OptimConfig",
    "OptimizerState",
    "ParadigmSpec",
    "RunConfig",
    "RunReport",
    "SelectionParams",
    "SoftTarget",
    "SplitResult",
    "TrainingSet",
    "adaptive_threshold",
    "avg_candidate_size",
    "class_frequency",
    "combined_batch_loss",
    "compute_b1",
    "confusion",
    "fewshot_unlabeled_subsample",
    "filter_nonempty",
    "frequency_ratio",
    "generate_candidates",
    "harmonic_mean",
    "init_model",
    "inter_select",
    "inter_thresholds",
    "intra_select",
    "label_estimation_accuracy",
    "load_container",
    "load_csv",
    "load_model",
    "logits_of",
    "loss_cav",
    "loss_cc",
    "loss_lw",
    "loss_rc",
    "loss_soft_ce",
    "loss_supervised_ce",
    "lr_at",
    "make_imbalanced",
    "make_soft_target",
    "make_synthetic",
    "nearest_rank",
    "per_class_accuracy",
    "predict_proba",
    "reinit",
    "run_cpl",
    "save_container",
    "save_csv",
    "save_model",
    "sets_from_targets",
    "sgd_step",
    "softmax_row",
    "softmax_rows",
    "split_ssl",
    "split_trzsl",
    "supervised_ce",
    "targets_from_sets",
    "top1_accuracy",
    "topk_curriculum_select",
]
