"""Evaluation quantities: accuracy, candidate-set statistics, confusion."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ConfidenceMatrix


def _hard_preds(preds) -> np.ndarray:
    """Accept a ConfidenceMatrix, a 2-D score array, or 1-D class indices."""
    if isinstance(preds, ConfidenceMatrix):
        return preds.p.argmax(axis=1)
    a = np.asarray(preds)
    if a.ndim == 2:
        return a.argmax(axis=1)
    if a.ndim == 1:
        return a.astype(np.int64)
    raise ValueError("predictions must be 1-D class indices or a 2-D score matrix")


@dataclass
class ConfusionMatrix:
    """Count matrix with true classes on rows, predictions on columns."""

    counts: np.ndarray

    def __post_init__(self) -> None:
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.ndim != 2 or self.counts.shape[0] != self.counts.shape[1]:
            raise ValueError("confusion matrix must be square")
        if np.any(self.counts < 0):
            raise ValueError("confusion counts must be nonnegative")

    @property
    def c(self) -> int:
        return self.counts.shape[0]


def top1_accuracy(preds, labels: np.ndarray) -> float:
    """Fraction of argmax predictions matching the labels."""
    hard = _hard_preds(preds)
    labels = np.asarray(labels, dtype=np.int64)
    if hard.shape != labels.shape:
        raise ValueError("predictions and labels must have equal length")
    if hard.size == 0:
        raise ValueError("empty input")
    return float(np.mean(hard == labels))


def per_class_accuracy(preds, labels: np.ndarray, c: int) -> np.ndarray:
    """Per-class recall; classes absent from ``labels`` score 0 so the vector
    stays finite (their zero weight keeps the weighted mean equal to top-1)."""
    hard = _hard_preds(preds)
    labels = np.asarray(labels, dtype=np.int64)
    out = np.zeros(c, dtype=np.float64)
    for k in range(c):
        mask = labels == k
        if mask.any():
            out[k] = float(np.mean(hard[mask] == k))
    return out


def confusion(preds, labels: np.ndarray, c: int | None = None) -> ConfusionMatrix:
    """Raw counts of (true, predicted) pairs, no normalization."""
    hard = _hard_preds(preds)
    labels = np.asarray(labels, dtype=np.int64)
    if hard.shape != labels.shape:
        raise ValueError("predictions and labels must have equal length")
    if c is None:
        c = int(max(hard.max(initial=0), labels.max(initial=0))) + 1
    counts = np.zeros((c, c), dtype=np.int64)
    np.add.at(counts, (labels, hard), 1)
    return ConfusionMatrix(counts)


def label_estimation_accuracy(assign, labels: np.ndarray, include_empty: bool = False) -> float:
    """Fraction of instances whose true label lies in their candidate set.

    By default the denominator covers only instances with a nonempty set;
    ``include_empty=True`` counts empty sets as misses instead.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (assign.n,):
        raise ValueError("labels must cover every assigned instance")
    if np.any(labels < 0):
        raise ValueError("ground-truth labels required")
    hit = assign.targets[np.arange(assign.n), labels] > 0
    if include_empty:
        return float(np.mean(hit))
    nonempty = assign.targets.sum(axis=1) > 0
    if not nonempty.any():
        raise ValueError("no nonempty candidate sets")
    return float(np.mean(hit[nonempty]))


def avg_candidate_size(assign) -> float:
    """Mean candidate-set size over instances with a nonempty set."""
    sizes = assign.targets.sum(axis=1)
    nonempty = sizes > 0
    if not nonempty.any():
        raise ValueError("no nonempty candidate sets")
    return float(np.mean(sizes[nonempty]))


def class_frequency(assign) -> np.ndarray:
    """How many candidate sets contain each class.  Accepts anything with a
    binary ``targets`` matrix (a full assignment or a selected training set)."""
    return assign.targets.sum(axis=0).astype(np.int64)


def frequency_ratio(counts: np.ndarray) -> float:
    """Max/min class-frequency ratio; the minimum is clamped to 1 so empty
    classes do not blow the ratio up to infinity."""
    counts = np.asarray(counts, dtype=np.float64)
    if counts.size == 0:
        raise ValueError("empty frequency vector")
    return float(counts.max() / max(counts.min(), 1.0))
