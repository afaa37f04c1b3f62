"""Shared value types for the candidate-pseudolabel engine.

Everything downstream (selection, losses, training loop) works on the small
set of containers defined here: a feature/logit container, a row-stochastic
confidence matrix, per-instance candidate label sets, and the linear head
that gets trained on them.  All types validate their invariants at
construction and are treated as immutable afterwards; arrays are kept in
float64 regardless of on-disk precision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

#: Sentinel label for unlabeled instances.
UNLABELED = -1

KINDS = ("features", "logits")
PARADIGMS = ("ssl", "ul", "trzsl")


class NoTrainableInstancesError(RuntimeError):
    """Raised when every candidate set is empty and nothing can be trained."""


class DivergedError(RuntimeError):
    """Raised when an optimizer update produces non-finite parameters."""


def round_half_up(x: float) -> int:
    """Round to the nearest integer with halves going up, so sizing rules do
    not depend on banker's rounding."""
    return int(math.floor(x + 0.5))


def softmax_row(logits: np.ndarray) -> np.ndarray:
    """Softmax of a single logit vector, shifted by the max for stability.

    Raises ValueError on non-finite input instead of propagating NaNs.
    """
    z = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(z)):
        raise ValueError("non-finite logits")
    shifted = z - z.max()
    e = np.exp(shifted)
    return e / e.sum()


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax of an (n, c) logit matrix with max-subtraction."""
    z = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(z)):
        raise ValueError("non-finite logits")
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


@dataclass
class DataContainer:
    """N x d matrix of features (or per-class logits) plus optional labels.

    ``labels`` uses ``UNLABELED`` (-1) for instances without ground truth, so a
    single container serves the unsupervised, semi-supervised and transductive
    settings.  ``kind == "logits"`` forces ``d == c``.
    """

    kind: str
    rows: np.ndarray
    c: int
    labels: np.ndarray | None = None
    class_names: list[str] | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown container kind {self.kind!r}")
        self.rows = np.asarray(self.rows, dtype=np.float64)
        if self.rows.ndim != 2:
            raise ValueError(f"rows must be 2-D, got shape {self.rows.shape}")
        if not np.all(np.isfinite(self.rows)):
            raise ValueError("rows contain non-finite entries")
        if self.c < 1:
            raise ValueError("need at least one class")
        if self.kind == "logits" and self.d != self.c:
            raise ValueError(
                f"logits container must have d == c, got d={self.d} c={self.c}"
            )
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (self.n,):
                raise ValueError(
                    f"labels shape {self.labels.shape} does not match n={self.n}"
                )
            bad = (self.labels >= self.c) | (
                (self.labels < 0) & (self.labels != UNLABELED)
            )
            if np.any(bad):
                raise ValueError(
                    f"labels out of range at index {int(np.flatnonzero(bad)[0])}"
                )
        if self.class_names is not None and len(self.class_names) != self.c:
            raise ValueError("class_names length must equal c")

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def d(self) -> int:
        return self.rows.shape[1]

    def labeled_indices(self) -> np.ndarray:
        """Indices with a ground-truth label (the labeled pool D_L)."""
        if self.labels is None:
            return np.empty(0, dtype=np.int64)
        return np.flatnonzero(self.labels != UNLABELED)

    def unlabeled_indices(self) -> np.ndarray:
        """Indices carrying the sentinel label (the unlabeled pool)."""
        if self.labels is None:
            return np.arange(self.n, dtype=np.int64)
        return np.flatnonzero(self.labels == UNLABELED)


@dataclass
class ConfidenceMatrix:
    """Row-stochastic (n, c) matrix of per-class confidence scores.

    Row i holds the model's class distribution for instance i.  Column views
    and the per-row maxima are derived on demand rather than stored.
    """

    p: np.ndarray

    def __post_init__(self) -> None:
        self.p = np.asarray(self.p, dtype=np.float64)
        if self.p.ndim != 2 or self.p.shape[0] == 0 or self.p.shape[1] == 0:
            raise ValueError(f"confidence matrix must be non-empty 2-D, got {self.p.shape}")
        if np.any(self.p < 0) or np.any(self.p > 1):
            raise ValueError("confidence entries must lie in [0, 1]")
        sums = self.p.sum(axis=1)
        off = np.abs(sums - 1.0)
        if np.any(off > 1e-6):
            i = int(np.argmax(off))
            raise ValueError(f"row {i} sums to {sums[i]:.8f}, not 1")

    @property
    def n(self) -> int:
        return self.p.shape[0]

    @property
    def c(self) -> int:
        return self.p.shape[1]

    def row(self, i: int) -> np.ndarray:
        return self.p[i]

    def column(self, c: int) -> np.ndarray:
        """Confidence of class ``c`` across all instances (the vector q_c)."""
        return self.p[:, c]

    def row_max(self) -> np.ndarray:
        """Per-instance top confidence (the vector of row maxima)."""
        return self.p.max(axis=1)

    @classmethod
    def from_logits(cls, logits: np.ndarray) -> "ConfidenceMatrix":
        return cls(softmax_rows(logits))


@dataclass
class SelectionParams:
    """Quantile ratios steering candidate generation.

    ``alpha`` sets the intra-instance cumulative threshold via the quantile of
    row maxima; ``beta`` sets the per-class inter-instance quantile, or is
    ``None`` to disable inter-instance selection entirely.  ``tau`` is the
    derived threshold; it is recomputed from ``alpha`` every iteration and is
    never supplied by callers.
    """

    alpha: float
    beta: float | None = None
    tau: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.beta is not None and not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must be in [0, 1] or None, got {self.beta}")

    def with_tau(self, tau: float) -> "SelectionParams":
        return replace(self, tau=tau)


def targets_from_sets(sets: Sequence[Sequence[int]], c: int) -> np.ndarray:
    """Binary (n, c) target matrix with row i marking membership in S_i."""
    t = np.zeros((len(sets), c), dtype=np.float64)
    for i, s in enumerate(sets):
        t[i, list(s)] = 1.0
    return t


def sets_from_targets(targets: np.ndarray) -> list[list[int]]:
    """Inverse of :func:`targets_from_sets`; rows back to sorted index lists."""
    return [[int(c) for c in np.flatnonzero(row)] for row in targets]


@dataclass
class CandidateAssignment:
    """Per-instance candidate pseudolabel sets with their provenance.

    ``sets[i]`` is the final sorted candidate set S_i, the intersection of the
    intra-instance prefix set and (when inter-instance selection is active)
    the per-class quantile set.  ``targets`` is the equivalent binary matrix.
    """

    c: int
    sets: list[list[int]]
    intra_sets: list[list[int]]
    inter_sets: list[list[int]] | None
    targets: np.ndarray
    tau: float

    def __post_init__(self) -> None:
        self.targets = np.asarray(self.targets, dtype=np.float64)
        if self.targets.shape != (len(self.sets), self.c):
            raise ValueError("targets shape does not match sets")
        if sets_from_targets(self.targets) != [sorted(s) for s in self.sets]:
            raise ValueError("targets disagree with sets")
        for i, s in enumerate(self.intra_sets):
            if len(s) == 0:
                raise ValueError(f"intra set {i} is empty")

    @property
    def n(self) -> int:
        return len(self.sets)

    def set_sizes(self) -> np.ndarray:
        return np.array([len(s) for s in self.sets], dtype=np.int64)

    def nonempty_indices(self) -> np.ndarray:
        return np.flatnonzero(self.set_sizes() > 0)


@dataclass
class TrainingSet:
    """Instances admitted to training this iteration, with their targets.

    ``indices`` point into the originating container; ``selected_by`` records
    which class's top-K pass admitted each instance (-1 when selection was a
    plain nonempty filter).
    """

    indices: np.ndarray
    targets: np.ndarray
    selected_by: np.ndarray

    def __post_init__(self) -> None:
        self.indices = np.asarray(self.indices, dtype=np.int64)
        self.targets = np.asarray(self.targets, dtype=np.float64)
        self.selected_by = np.asarray(self.selected_by, dtype=np.int64)
        if len(np.unique(self.indices)) != len(self.indices):
            raise ValueError("training-set indices must be unique")
        if self.targets.shape[0] != len(self.indices):
            raise ValueError("targets row count does not match indices")
        if self.selected_by.shape != (len(self.indices),):
            raise ValueError("selected_by length does not match indices")
        if np.any(self.targets.sum(axis=1) < 1):
            raise ValueError("training set contains an empty candidate set")

    @property
    def m(self) -> int:
        return len(self.indices)


@dataclass
class CurriculumState:
    """Per-class cap K_t for iteration t and its per-iteration increment."""

    t: int
    big_t: int
    k_t: int
    delta: int

    def __post_init__(self) -> None:
        if not 1 <= self.t <= self.big_t:
            raise ValueError(f"iteration {self.t} outside 1..{self.big_t}")
        if self.k_t < 1:
            raise ValueError("per-class cap must be at least 1")

    @classmethod
    def initial(cls, n_unlabeled: int, big_t: int, c: int) -> "CurriculumState":
        """First-iteration state: cap grows by floor(N_UL / (T*C)) per round.

        The increment converts the dataset-level per-iteration budget into a
        per-class cap so the final iteration can cover the whole pool; the
        first cap equals the increment, floored at one.
        """
        delta = n_unlabeled // (big_t * c)
        return cls(t=1, big_t=big_t, k_t=max(1, delta), delta=delta)

    def advanced(self) -> "CurriculumState":
        return CurriculumState(
            t=self.t + 1, big_t=self.big_t, k_t=self.k_t + self.delta, delta=self.delta
        )


@dataclass
class ParadigmSpec:
    """Which learning setting is being run and its split parameters."""

    paradigm: str
    labeled_per_class: int = 2
    seen_fraction: float = 0.62
    q_fewshot: int | None = None
    lam: float = 1.0

    def __post_init__(self) -> None:
        if self.paradigm not in PARADIGMS:
            raise ValueError(f"unknown paradigm {self.paradigm!r}")
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if not 0.0 < self.seen_fraction < 1.0:
            raise ValueError("seen_fraction must lie in (0, 1)")
        if self.paradigm == "ssl" and self.labeled_per_class < 1:
            raise ValueError("ssl needs at least one labeled sample per class")
        if self.q_fewshot is not None and self.q_fewshot < 1:
            raise ValueError("q_fewshot must be at least 1")


@dataclass
class OptimConfig:
    """SGD / schedule hyperparameters; ``b2`` is the unlabeled batch size."""

    epochs: int = 50
    warmup_epochs: int = 2
    lr: float = 0.02
    warmup_lr: float = 1e-4
    momentum: float = 0.9
    weight_decay: float = 5e-2
    b2: int = 64

    def __post_init__(self) -> None:
        if self.warmup_epochs >= self.epochs:
            raise ValueError("warmup_epochs must be smaller than epochs")
        if self.lr <= 0 or self.warmup_lr <= 0:
            raise ValueError("learning rates must be positive")
        if self.b2 < 1:
            raise ValueError("b2 must be at least 1")


@dataclass
class LinearModel:
    """Linear softmax head over frozen features: logits = W x + b."""

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2:
            raise ValueError("weights must be a (c, d) matrix")
        if self.bias.shape != (self.weights.shape[0],):
            raise ValueError("bias length must match weight rows")
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise ValueError("model parameters must be finite")

    @property
    def c(self) -> int:
        return self.weights.shape[0]

    @property
    def d(self) -> int:
        return self.weights.shape[1]
