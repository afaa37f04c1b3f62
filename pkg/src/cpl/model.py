"""Linear classification head and its optimizer.

The model is a single affine map over fixed feature rows; gradients arrive
from the loss layer as per-example logit gradients, so the backward pass here
is one matrix product.  The optimizer is classic momentum SGD with coupled
weight decay, stepped under a warmup-then-cosine learning-rate schedule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ConfidenceMatrix, DivergedError, LinearModel, OptimConfig, softmax_rows


@dataclass
class OptimizerState:
    """Momentum buffers plus a step counter."""

    velocity_w: np.ndarray
    velocity_b: np.ndarray
    step: int = 0

    @classmethod
    def zeros_like(cls, model: LinearModel) -> "OptimizerState":
        return cls(
            velocity_w=np.zeros_like(model.weights),
            velocity_b=np.zeros_like(model.bias),
        )


def init_model(d: int, c: int, seed) -> LinearModel:
    """Uniform(-1/sqrt(d), 1/sqrt(d)) weights, zero bias.  ``seed`` is any
    seed accepted by numpy's generator, including an int sequence."""
    if d < 1 or c < 2:
        raise ValueError("need d >= 1 and c >= 2")
    rng = np.random.default_rng(seed)
    bound = 1.0 / math.sqrt(d)
    weights = rng.uniform(-bound, bound, size=(c, d))
    return LinearModel(weights=weights, bias=np.zeros(c, dtype=np.float64))


def reinit(model: LinearModel, seed) -> LinearModel:
    """Fresh seeded parameters with the same shape."""
    return init_model(model.d, model.c, seed)


def logits_of(model: LinearModel, features: np.ndarray) -> np.ndarray:
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.d:
        raise ValueError(f"features must have shape (n, {model.d})")
    return x @ model.weights.T + model.bias


def predict_proba(model: LinearModel, features: np.ndarray) -> ConfidenceMatrix:
    return ConfidenceMatrix(softmax_rows(logits_of(model, features)))


def backward(features: np.ndarray, grad_logits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Parameter gradients from per-example logit gradients."""
    x = np.asarray(features, dtype=np.float64)
    g = np.asarray(grad_logits, dtype=np.float64)
    return g.T @ x, g.sum(axis=0)


def sgd_step(
    model: LinearModel,
    grad_w: np.ndarray,
    grad_b: np.ndarray,
    state: OptimizerState,
    lr: float,
    cfg: OptimConfig,
) -> tuple[LinearModel, OptimizerState]:
    """One momentum step with coupled weight decay:
    v <- momentum * v + grad + wd * theta; theta <- theta - lr * v."""
    if grad_w.shape != model.weights.shape or grad_b.shape != model.bias.shape:
        raise ValueError("gradient shapes must match the model")
    vw = cfg.momentum * state.velocity_w + grad_w + cfg.weight_decay * model.weights
    vb = cfg.momentum * state.velocity_b + grad_b + cfg.weight_decay * model.bias
    weights = model.weights - lr * vw
    bias = model.bias - lr * vb
    if not (np.all(np.isfinite(weights)) and np.all(np.isfinite(bias))):
        raise DivergedError("diverged")
    return (
        LinearModel(weights=weights, bias=bias),
        OptimizerState(velocity_w=vw, velocity_b=vb, step=state.step + 1),
    )


def save_model(model: LinearModel, path) -> None:
    """Checkpoint as a features-kind container of shape (c, d+1): weight rows
    with the bias as the trailing column."""
    from .dataio import save_container
    from .core import DataContainer

    rows = np.concatenate([model.weights, model.bias[:, np.newaxis]], axis=1)
    save_container(DataContainer(kind="features", rows=rows, c=model.c), path)


def load_model(path) -> LinearModel:
    from .dataio import load_container

    box = load_container(path)
    if box.kind != "features" or box.n != box.c or box.d < 2:
        raise ValueError(f"{path} is not a (c, d+1) checkpoint container")
    return LinearModel(weights=box.rows[:, :-1], bias=box.rows[:, -1])


def lr_at(epoch: int, total_epochs: int, cfg: OptimConfig) -> float:
    """Constant warmup learning rate, then cosine decay from the base rate
    to zero over the remaining epochs."""
    if not 0 <= epoch < total_epochs:
        raise ValueError(f"epoch {epoch} outside [0, {total_epochs})")
    warmup = min(cfg.warmup_epochs, max(total_epochs - 1, 0))
    if epoch < warmup:
        return cfg.warmup_lr
    span = total_epochs - warmup
    return cfg.lr * 0.5 * (1.0 + math.cos(math.pi * (epoch - warmup) / span))
