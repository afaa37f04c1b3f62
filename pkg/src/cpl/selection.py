"""Candidate pseudolabel generation.

Two complementary filters produce the candidate set for every unlabeled
instance: an intra-instance filter keeps the smallest descending-confidence
prefix whose cumulative probability reaches an adaptive threshold, and an
inter-instance filter keeps a class only where the instance ranks above that
class's quantile across the whole pool.  The final set is their
intersection.  A class-wise top-K pass then admits a growing number of
instances per class into the training set each iteration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    CandidateAssignment,
    ConfidenceMatrix,
    CurriculumState,
    NoTrainableInstancesError,
    SelectionParams,
    TrainingSet,
    targets_from_sets,
)

# Absorbs binary representation error in ratio * n so that decimal ratios hit
# their mathematical rank (e.g. floor(0.7 * 10) must be 7, not 6).
_RANK_EPS = 1e-9


def nearest_rank(values: np.ndarray, ratio: float) -> float:
    """Value at the given quantile of ``values``: ascending sort, index
    min(floor(ratio * n), n - 1), no interpolation."""
    v = np.sort(np.asarray(values, dtype=np.float64))
    n = v.shape[0]
    if n == 0:
        raise ValueError("quantile of empty vector")
    idx = min(math.floor(ratio * n + _RANK_EPS), n - 1)
    return float(v[idx])


def adaptive_threshold(conf: ConfidenceMatrix, alpha: float) -> float:
    """Cumulative-confidence threshold: the alpha-quantile of the per-instance
    top confidences.  alpha = 0 gives the pool minimum, recovering plain
    hard pseudolabeling downstream."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    return nearest_rank(conf.row_max(), alpha)


def intra_select(row: np.ndarray, tau: float) -> list[int]:
    """Minimal descending-confidence prefix of classes whose cumulative
    probability reaches ``tau``.

    Ties in confidence break toward the lower class index.  The result always
    contains the argmax and is never empty; if rounding keeps the running sum
    below ``tau`` even with every class included, all classes are returned.
    """
    row = np.asarray(row, dtype=np.float64)
    order = np.argsort(-row, kind="stable")
    cum = np.cumsum(row[order])
    reached = np.flatnonzero(cum >= tau)
    size = int(reached[0]) + 1 if reached.size else row.shape[0]
    return sorted(int(c) for c in order[:size])


@dataclass
class ClassThresholds:
    """Per-class confidence cutoffs from the beta-quantile of each column."""

    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1:
            raise ValueError("thresholds must be a vector")
        if np.any(self.values < 0) or np.any(self.values > 1):
            raise ValueError("thresholds must lie in [0, 1]")


def inter_thresholds(conf: ConfidenceMatrix, beta: float) -> ClassThresholds:
    """Beta-quantile of every class column, with the same nearest-rank rule
    as :func:`adaptive_threshold`."""
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must be in [0, 1], got {beta}")
    values = np.array(
        [nearest_rank(conf.column(c), beta) for c in range(conf.c)], dtype=np.float64
    )
    return ClassThresholds(values)


def inter_select(row_index: int, conf: ConfidenceMatrix, th: ClassThresholds) -> list[int]:
    """Classes where this instance sits strictly above the class cutoff.

    Strict comparison means instances exactly at the quantile value drop out;
    the result may be empty.
    """
    row = conf.row(row_index)
    return [int(c) for c in np.flatnonzero(row > th.values)]


def generate_candidates(
    conf: ConfidenceMatrix, params: SelectionParams
) -> CandidateAssignment:
    """Run both selection stages over the whole pool.

    The adaptive threshold is always recomputed from ``params.alpha``; with
    ``params.beta`` None the inter-instance stage is skipped and each final
    set equals its intra-instance prefix.
    """
    tau = adaptive_threshold(conf, params.alpha)
    intra = [intra_select(conf.row(i), tau) for i in range(conf.n)]
    if params.beta is None:
        sets = [list(s) for s in intra]
        inter = None
    else:
        th = inter_thresholds(conf, params.beta)
        above = conf.p > th.values[np.newaxis, :]
        inter = [[int(c) for c in np.flatnonzero(above[i])] for i in range(conf.n)]
        sets = [sorted(set(a) & set(b)) for a, b in zip(intra, inter)]
    return CandidateAssignment(
        c=conf.c,
        sets=sets,
        intra_sets=intra,
        inter_sets=inter,
        targets=targets_from_sets(sets, conf.c),
        tau=tau,
    )


def filter_nonempty(assign: CandidateAssignment) -> TrainingSet:
    """Keep every instance with at least one candidate label."""
    keep = assign.nonempty_indices()
    if keep.size == 0:
        raise NoTrainableInstancesError("no trainable instances")
    return TrainingSet(
        indices=keep,
        targets=assign.targets[keep],
        selected_by=np.full(keep.size, -1, dtype=np.int64),
    )


def topk_curriculum_select(
    assign: CandidateAssignment, conf: ConfidenceMatrix, state: CurriculumState
) -> TrainingSet:
    """Class-wise top-K admission into the training set.

    Classes are visited in ascending index order.  For class c the still
    unselected instances whose candidate set contains c are ranked by their
    confidence in c (ties toward the lower instance index) and the top K_t
    move into the training set; a selected instance leaves the pool, so no
    instance appears twice and every class contributes at most K_t entries.
    """
    if assign.n != conf.n:
        raise ValueError("assignment and confidence matrix disagree on n")
    available = assign.targets.sum(axis=1) > 0
    picked: list[int] = []
    picked_by: list[int] = []
    for c in range(assign.c):
        eligible = np.flatnonzero(available & (assign.targets[:, c] > 0))
        if eligible.size == 0:
            continue
        # stable argsort on the negated column keeps ascending instance order
        # among ties
        order = eligible[np.argsort(-conf.p[eligible, c], kind="stable")]
        take = order[: state.k_t]
        for i in take:
            picked.append(int(i))
            picked_by.append(c)
            available[i] = False
    if not picked:
        raise NoTrainableInstancesError("no trainable instances")
    idx = np.array(picked, dtype=np.int64)
    return TrainingSet(
        indices=idx,
        targets=assign.targets[idx],
        selected_by=np.array(picked_by, dtype=np.int64),
    )
