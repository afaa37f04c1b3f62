"""Partial-label training objectives.

Every loss consumes raw logits plus a binary candidate-target vector and
returns both the scalar value and its analytic gradient with respect to the
logits, so the linear trainer needs no autodiff.  All math runs in float64.

Weighted variants (RC, LW) treat their per-class weights as constants of the
optimization: the weights are computed from detached probabilities and the
gradient does not flow through them.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import softmax_rows

logger = logging.getLogger(__name__)

LOSS_KINDS = ("cc", "rc", "cav", "lw", "soft_ce")


@dataclass(frozen=True)
class LossKind:
    """Which partial-label objective to use, plus its knobs."""

    kind: str
    lw_leverage: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}; expected one of {LOSS_KINDS}")
        if self.lw_leverage < 0:
            raise ValueError("lw_leverage must be nonnegative")


@dataclass(frozen=True)
class SoftTarget:
    """Probability vector used as a soft training target."""

    y: np.ndarray

    def __post_init__(self) -> None:
        y = np.asarray(self.y, dtype=np.float64)
        if y.ndim != 1:
            raise ValueError("soft target must be a vector")
        if np.any(y < 0):
            raise ValueError("soft target entries must be nonnegative")
        if abs(float(y.sum()) - 1.0) > 1e-9:
            raise ValueError("soft target must sum to 1")
        object.__setattr__(self, "y", y)


def _as_targets(s: np.ndarray, c: int) -> np.ndarray:
    s = np.asarray(s)
    if s.shape != (c,):
        raise ValueError(f"candidate target must have shape ({c},), got {s.shape}")
    if not np.all((s == 0) | (s == 1)):
        raise ValueError("candidate target must be binary")
    if not s.any():
        raise ValueError("empty candidate target")
    return s.astype(np.float64)


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    m = z.max(axis=-1, keepdims=True)
    return z - m - np.log(np.exp(z - m).sum(axis=-1, keepdims=True))


def make_soft_target(probs_row: np.ndarray, s: np.ndarray) -> SoftTarget:
    """Renormalize a probability row over the candidate set.

    Zero candidate mass falls back to a uniform distribution over the set
    (logged), so the result is always a valid distribution.
    """
    s = _as_targets(s, np.asarray(probs_row).shape[0])
    masked = np.asarray(probs_row, dtype=np.float64) * s
    mass = float(masked.sum())
    if mass <= 0.0:
        logger.warning("zero candidate mass; using uniform soft target over the candidate set")
        y = s / s.sum()
    else:
        y = masked / mass
    return SoftTarget(y)


def _candidate_weights(detached_probs: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Detached probabilities renormalized over each row's candidate set,
    with a uniform fallback on zero mass."""
    masked = detached_probs * targets
    mass = masked.sum(axis=1, keepdims=True)
    zero = mass[:, 0] <= 0.0
    if zero.any():
        logger.warning(
            "zero candidate mass on %d rows; falling back to uniform weights", int(zero.sum())
        )
        masked[zero] = targets[zero]
        mass = masked.sum(axis=1, keepdims=True)
    return masked / mass


def _batch_cc(logits: np.ndarray, targets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    logp = _log_softmax(logits)
    p = np.exp(logp)
    in_set = p * targets
    mass = in_set.sum(axis=1, keepdims=True)
    values = -np.log(mass[:, 0])
    grads = p - in_set / mass
    return values, grads


def _batch_rc(
    logits: np.ndarray, targets: np.ndarray, detached_probs: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    logp = _log_softmax(logits)
    p = np.exp(logp)
    w = _candidate_weights(detached_probs, targets)
    values = -np.where(w > 0, w * logp, 0.0).sum(axis=1)
    grads = p - w
    return values, grads


def _batch_cav(logits: np.ndarray, targets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    logp = _log_softmax(logits)
    p = np.exp(logp)
    masked = np.where(targets > 0, np.asarray(logits, dtype=np.float64), -np.inf)
    # argmax returns the first maximum, i.e. the lowest class index on ties
    star = masked.argmax(axis=1)
    rows = np.arange(logits.shape[0])
    values = -logp[rows, star]
    grads = p.copy()
    grads[rows, star] -= 1.0
    return values, grads


def _batch_lw(
    logits: np.ndarray,
    targets: np.ndarray,
    leverage: float,
    detached_probs: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    # Per-class margin m_c = z_c - logsumexp of the other logits, scored with
    # the logistic loss: softplus(-m_c) for candidates, softplus(m_c) for the
    # rest.  Those coincide with -log p_c and -log(1 - p_c), which is how both
    # value and gradient are computed here.
    logp = _log_softmax(logits)
    p = np.exp(logp)
    w = _candidate_weights(detached_probs, targets)
    cand_values = -np.where(w > 0, w * logp, 0.0).sum(axis=1)
    cand_grads = p - w

    comp = 1.0 - targets
    comp_masked = detached_probs * comp
    comp_mass = comp_masked.sum(axis=1, keepdims=True)
    has_comp = comp_mass[:, 0] > 0.0
    w2 = np.zeros_like(comp_masked)
    np.divide(comp_masked, comp_mass, out=w2, where=comp_mass > 0.0)
    uniform_rows = ~has_comp & (comp.sum(axis=1) > 0)
    if uniform_rows.any():
        w2[uniform_rows] = comp[uniform_rows] / comp.sum(axis=1, keepdims=True)[uniform_rows]

    one_minus = np.clip(1.0 - p, np.finfo(np.float64).tiny, None)
    comp_values = -np.where(w2 > 0, w2 * np.log(one_minus), 0.0).sum(axis=1)
    q = w2 * p / one_minus
    big_q = q.sum(axis=1, keepdims=True)
    comp_grads = w2 * p - p * (big_q - q)

    values = cand_values + leverage * comp_values
    grads = cand_grads + leverage * comp_grads
    return values, grads


def _batch_soft_ce(logits: np.ndarray, soft_targets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    logp = _log_softmax(logits)
    p = np.exp(logp)
    y = np.asarray(soft_targets, dtype=np.float64)
    values = -np.where(y > 0, y * logp, 0.0).sum(axis=1)
    grads = p - y
    return values, grads


def _batch_ce(logits: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    logp = _log_softmax(logits)
    p = np.exp(logp)
    rows = np.arange(logits.shape[0])
    values = -logp[rows, labels]
    grads = p.copy()
    grads[rows, labels] -= 1.0
    return values, grads


def loss_cc(logits: np.ndarray, s: np.ndarray) -> tuple[float, np.ndarray]:
    """Negative log of the total candidate probability."""
    z = np.asarray(logits, dtype=np.float64)
    t = _as_targets(s, z.shape[0])
    values, grads = _batch_cc(z[np.newaxis], t[np.newaxis])
    return float(values[0]), grads[0]


def loss_rc(
    logits: np.ndarray, s: np.ndarray, detached_probs: np.ndarray
) -> tuple[float, np.ndarray]:
    """Cross entropy against each candidate, weighted by the detached
    probabilities renormalized over the candidate set."""
    z = np.asarray(logits, dtype=np.float64)
    t = _as_targets(s, z.shape[0])
    dp = np.asarray(detached_probs, dtype=np.float64)
    if dp.shape != z.shape:
        raise ValueError("detached_probs must match logits shape")
    values, grads = _batch_rc(z[np.newaxis], t[np.newaxis], dp[np.newaxis])
    return float(values[0]), grads[0]


def loss_cav(logits: np.ndarray, s: np.ndarray) -> tuple[float, np.ndarray]:
    """Cross entropy toward the highest-logit candidate (ties break toward
    the lower class index)."""
    z = np.asarray(logits, dtype=np.float64)
    t = _as_targets(s, z.shape[0])
    values, grads = _batch_cav(z[np.newaxis], t[np.newaxis])
    return float(values[0]), grads[0]


def loss_lw(
    logits: np.ndarray,
    s: np.ndarray,
    leverage: float = 1.0,
    detached_probs: np.ndarray | None = None,
) -> tuple[float, np.ndarray]:
    """Weighted logistic losses on per-class rest-of-the-field margins.

    Candidate classes pay for a small margin, non-candidate classes pay
    (scaled by ``leverage``) for a large one.  Weights renormalize the
    detached probabilities over each group; when ``detached_probs`` is None
    the current softmax of ``logits`` is detached and used.
    """
    if leverage < 0:
        raise ValueError("leverage must be nonnegative")
    z = np.asarray(logits, dtype=np.float64)
    t = _as_targets(s, z.shape[0])
    if detached_probs is None:
        dp = softmax_rows(z[np.newaxis])
    else:
        dp = np.asarray(detached_probs, dtype=np.float64)[np.newaxis]
        if dp.shape != (1, z.shape[0]):
            raise ValueError("detached_probs must match logits shape")
    values, grads = _batch_lw(z[np.newaxis], t[np.newaxis], leverage, dp)
    return float(values[0]), grads[0]


def loss_soft_ce(logits: np.ndarray, target: SoftTarget) -> tuple[float, np.ndarray]:
    """Cross entropy against a fixed soft target."""
    z = np.asarray(logits, dtype=np.float64)
    if target.y.shape != z.shape:
        raise ValueError("soft target must match logits shape")
    values, grads = _batch_soft_ce(z[np.newaxis], target.y[np.newaxis])
    return float(values[0]), grads[0]


def loss_supervised_ce(logits: np.ndarray, label: int) -> tuple[float, np.ndarray]:
    """Plain cross entropy against a ground-truth label."""
    z = np.asarray(logits, dtype=np.float64)
    if not 0 <= label < z.shape[0]:
        raise ValueError(f"label {label} out of range for {z.shape[0]} classes")
    values, grads = _batch_ce(z[np.newaxis], np.array([label]))
    return float(values[0]), grads[0]


supervised_ce = loss_supervised_ce


def combined_batch_loss(
    labeled: tuple[np.ndarray, np.ndarray] | None,
    unlabeled: tuple | None,
    lam: float,
    kind: LossKind,
) -> tuple[float, tuple[np.ndarray | None, np.ndarray | None]]:
    """Mean supervised cross entropy plus ``lam`` times the mean partial-label
    loss, with gradients carrying the same scaling.

    ``labeled`` is (logits, labels) or None; ``unlabeled`` is
    (logits, targets) or, for soft_ce, (logits, targets, soft_targets).
    Either side may be absent but not both.  Without a labeled batch (the
    fully unlabeled objective) ``lam`` is ignored and the partial-label mean
    stands alone.
    """
    if labeled is None and unlabeled is None:
        raise ValueError("combined loss needs at least one batch")
    if labeled is None:
        lam = 1.0
    total = 0.0
    grad_labeled = None
    grad_unlabeled = None
    if labeled is not None:
        lz, labels = labeled
        lz = np.asarray(lz, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.int64)
        values, grads = _batch_ce(lz, labels)
        total += float(values.mean())
        grad_labeled = grads / lz.shape[0]
    if unlabeled is not None:
        uz, targets = unlabeled[0], unlabeled[1]
        uz = np.asarray(uz, dtype=np.float64)
        targets = np.asarray(targets, dtype=np.float64)
        if kind.kind == "cc":
            values, grads = _batch_cc(uz, targets)
        elif kind.kind == "rc":
            values, grads = _batch_rc(uz, targets, softmax_rows(uz))
        elif kind.kind == "cav":
            values, grads = _batch_cav(uz, targets)
        elif kind.kind == "lw":
            values, grads = _batch_lw(uz, targets, kind.lw_leverage, softmax_rows(uz))
        else:
            if len(unlabeled) < 3 or unlabeled[2] is None:
                raise ValueError("soft_ce needs precomputed soft targets")
            values, grads = _batch_soft_ce(uz, np.asarray(unlabeled[2], dtype=np.float64))
        total += lam * float(values.mean())
        grad_unlabeled = lam * grads / uz.shape[0]
    return total, (grad_labeled, grad_unlabeled)
