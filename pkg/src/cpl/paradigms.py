"""Dataset splits for the supported learning paradigms.

Three regimes share one engine: semi-supervised (a few labeled instances per
class), fully unlabeled, and transductive zero-shot (seen classes labeled,
unseen classes unlabeled).  These helpers build the index splits and the
imbalanced variants from a fully labeled container; the trainer treats the
split as the only source of supervision.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import DataContainer, round_half_up

logger = logging.getLogger(__name__)


@dataclass
class SplitResult:
    """Disjoint labeled/unlabeled index pools, plus the seen/unseen class
    partition for the transductive zero-shot regime."""

    labeled_indices: np.ndarray
    unlabeled_indices: np.ndarray
    seen_classes: np.ndarray | None = None
    unseen_classes: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.labeled_indices = np.asarray(self.labeled_indices, dtype=np.int64)
        self.unlabeled_indices = np.asarray(self.unlabeled_indices, dtype=np.int64)
        if np.intersect1d(self.labeled_indices, self.unlabeled_indices).size:
            raise ValueError("labeled and unlabeled pools overlap")
        for name in ("seen_classes", "unseen_classes"):
            v = getattr(self, name)
            if v is not None:
                setattr(self, name, np.asarray(v, dtype=np.int64))


def _require_labels(data: DataContainer, op: str) -> np.ndarray:
    if data.labels is None:
        raise ValueError(f"{op} needs ground-truth labels")
    return data.labels


def split_ssl(data: DataContainer, labeled_per_class: int, seed: int) -> SplitResult:
    """Pick ``labeled_per_class`` seeded instances of every class as the
    labeled pool; everything else is unlabeled."""
    if labeled_per_class < 1:
        raise ValueError("labeled_per_class must be >= 1")
    labels = _require_labels(data, "split_ssl")
    if np.any(labels < 0):
        raise ValueError("split_ssl needs a fully labeled container")
    rng = np.random.default_rng(seed)
    labeled: list[np.ndarray] = []
    for c in range(data.c):
        members = np.flatnonzero(labels == c)
        if members.size < labeled_per_class:
            raise ValueError(
                f"class {c} has {members.size} instances, needs {labeled_per_class}"
            )
        labeled.append(np.sort(rng.permutation(members)[:labeled_per_class]))
    labeled_idx = np.sort(np.concatenate(labeled))
    unlabeled_idx = np.setdiff1d(np.arange(data.n), labeled_idx)
    return SplitResult(labeled_indices=labeled_idx, unlabeled_indices=unlabeled_idx)


def split_trzsl(data: DataContainer, seen_fraction: float, seed: int) -> SplitResult:
    """Mark a seeded fraction of the classes as seen (fully labeled); all
    instances of the remaining unseen classes form the unlabeled pool."""
    if not 0.0 < seen_fraction < 1.0:
        raise ValueError("seen_fraction must be in (0, 1)")
    labels = _require_labels(data, "split_trzsl")
    if np.any(labels < 0):
        raise ValueError("split_trzsl needs a fully labeled container")
    if data.c < 2:
        raise ValueError("need at least 2 classes")
    n_seen = round_half_up(seen_fraction * data.c)
    if n_seen == 0 or n_seen == data.c:
        raise ValueError(
            f"seen_fraction {seen_fraction} leaves {n_seen} seen of {data.c} classes"
        )
    perm = np.random.default_rng(seed).permutation(data.c)
    seen = np.sort(perm[:n_seen])
    unseen = np.sort(perm[n_seen:])
    labeled_idx = np.flatnonzero(np.isin(labels, seen))
    unlabeled_idx = np.flatnonzero(np.isin(labels, unseen))
    return SplitResult(
        labeled_indices=labeled_idx,
        unlabeled_indices=unlabeled_idx,
        seen_classes=seen,
        unseen_classes=unseen,
    )


def make_imbalanced(data: DataContainer, delta: float, seed: int) -> DataContainer:
    """Exponential class-imbalance profile: in a seeded class order, rank r
    keeps round(n_max * delta^(-r/(C-1))) instances, so the first-ranked class
    keeps n_max and the last keeps n_max/delta."""
    if delta < 1:
        raise ValueError("delta must be >= 1")
    labels = _require_labels(data, "make_imbalanced")
    if np.any(labels < 0):
        raise ValueError("make_imbalanced needs a fully labeled container")
    if data.c < 2:
        raise ValueError("need at least 2 classes")
    rng = np.random.default_rng(seed)
    order = rng.permutation(data.c)
    counts = np.bincount(labels, minlength=data.c)
    n_max = int(counts.max())
    keep: list[np.ndarray] = []
    for rank, c in enumerate(order):
        want = round_half_up(n_max * delta ** (-rank / (data.c - 1)))
        if want == 0:
            logger.warning("class %d profile rounded to 0; clamping to 1", int(c))
            want = 1
        members = np.flatnonzero(labels == c)
        if want > members.size:
            logger.warning(
                "class %d has only %d instances for a profile of %d",
                int(c),
                members.size,
                want,
            )
            want = members.size
        keep.append(rng.permutation(members)[:want])
    idx = np.sort(np.concatenate(keep))
    return DataContainer(
        kind=data.kind,
        rows=data.rows[idx],
        c=data.c,
        labels=labels[idx],
        class_names=data.class_names,
    )


def harmonic_mean(acc_seen: float, acc_unseen: float) -> float:
    """2ab/(a+b); zero when both accuracies are zero."""
    for v in (acc_seen, acc_unseen):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"accuracy {v} outside [0, 1]")
    if acc_seen + acc_unseen == 0.0:
        return 0.0
    return 2.0 * acc_seen * acc_unseen / (acc_seen + acc_unseen)
