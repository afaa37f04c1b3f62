"""The outer self-training loop.

Each iteration scores the unlabeled pool, generates candidate pseudolabels,
admits a growing per-class top-K slice of them into the training set, retrains
a freshly initialized linear head on that slice (mixing in labeled batches for
the semi-supervised and transductive regimes), and logs the metrics the run
report aggregates.  Everything is driven by one master seed; identical inputs
give byte-identical serialized reports.
"""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from . import metrics as metrics_mod
from . import model as model_mod
from .core import (
    ConfidenceMatrix,
    CurriculumState,
    DataContainer,
    LinearModel,
    NoTrainableInstancesError,
    OptimConfig,
    ParadigmSpec,
    SelectionParams,
    TrainingSet,
    round_half_up,
)
from .losses import LossKind, combined_batch_loss, make_soft_target
from .paradigms import SplitResult, harmonic_mean
from .selection import generate_candidates, topk_curriculum_select

logger = logging.getLogger(__name__)


@dataclass
class RunConfig:
    """Everything a run needs besides the data."""

    paradigm: ParadigmSpec
    selection: SelectionParams
    loss: LossKind
    optim: OptimConfig = field(default_factory=OptimConfig)
    big_t: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        if self.big_t < 1:
            raise ValueError("big_t must be at least 1")


@dataclass
class IterationRecord:
    """Metrics logged after one curriculum iteration."""

    t: int
    tau: float
    k_t: int
    m: int
    avg_candidate_size: float
    label_estimation_accuracy: float | None
    label_estimation_accuracy_all: float | None
    train_loss: list[float]
    test_top1: float | None
    per_class_accuracy: list[float] | None
    class_frequency: list[int]
    harmonic_mean: float | None


@dataclass
class RunReport:
    """Full run log: one record per iteration plus the final summary.

    ``to_json`` is canonical (sorted keys, fixed float repr) so reruns with
    the same inputs serialize byte-identically.  The final confusion matrix
    rides along for CSV export but stays out of the JSON document.
    """

    config: dict
    records: list[IterationRecord]
    final: dict
    final_confusion: list[list[int]] | None = None
    final_model: LinearModel | None = None

    def to_doc(self) -> dict:
        return {
            "config": self.config,
            "per_iteration": [asdict(r) for r in self.records],
            "final": self.final,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_doc(), indent=2, sort_keys=True) + "\n"


def compute_b1(labeled_size: int, training_set_size: int, b2: int) -> int:
    """Labeled batch size proportional to the labeled/pseudolabeled ratio, so
    both loaders finish an epoch in a similar number of steps."""
    if training_set_size < 1:
        raise ValueError("training_set_size must be at least 1")
    if b2 < 1:
        raise ValueError("b2 must be at least 1")
    return max(1, round_half_up(labeled_size / training_set_size * b2))


def fewshot_unlabeled_subsample(data: DataContainer, q: int, seed: int) -> DataContainer:
    """Cap the unlabeled pool at ``q`` instances per true class.

    An evaluation-harness helper: it needs ground truth to stratify, then
    re-masks every label to the sentinel so the result is a plain unlabeled
    container.  Classes with no instances are skipped with a warning.
    """
    if q < 1:
        raise ValueError("q must be at least 1")
    if data.labels is None or np.any(data.labels < 0):
        raise ValueError("fewshot subsampling needs ground-truth labels")
    rng = np.random.default_rng(seed)
    keep: list[np.ndarray] = []
    for c in range(data.c):
        members = np.flatnonzero(data.labels == c)
        if members.size == 0:
            logger.warning("class %d has no instances; skipping", c)
            continue
        keep.append(np.sort(rng.permutation(members)[:q]))
    idx = np.sort(np.concatenate(keep))
    return DataContainer(
        kind=data.kind,
        rows=data.rows[idx],
        c=data.c,
        labels=np.full(idx.size, -1, dtype=np.int64),
        class_names=data.class_names,
    )


def _config_echo(config: RunConfig) -> dict:
    echo = asdict(config)
    return echo


def _derive_split(
    config: RunConfig, data: DataContainer, split: SplitResult | None
) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Labeled pool, unlabeled pool, and seen classes (transductive only).

    In the unlabeled paradigm every instance is pool and any labels present
    are hidden ground truth for metrics only.  Otherwise an explicit split
    wins; failing that, sentinel labels define the pools.
    """
    paradigm = config.paradigm.paradigm
    if paradigm == "ul":
        if split is not None:
            raise ValueError("paradigm ul does not take a split")
        return np.empty(0, dtype=np.int64), np.arange(data.n, dtype=np.int64), None
    if split is not None:
        labeled = split.labeled_indices
        unlabeled = split.unlabeled_indices
        seen = split.seen_classes
    else:
        labeled = data.labeled_indices()
        unlabeled = data.unlabeled_indices()
        seen = None
    if labeled.size == 0:
        raise ValueError(f"paradigm {paradigm} needs labeled instances")
    if data.labels is None or np.any(data.labels[labeled] < 0):
        raise ValueError("labeled pool lacks ground-truth labels")
    if paradigm == "trzsl" and seen is None:
        seen = np.unique(data.labels[labeled])
    return labeled, unlabeled, seen


def _subsample_pool(
    pool: np.ndarray, truth: np.ndarray | None, q: int, seed: int, c: int
) -> np.ndarray:
    if truth is None or np.any(truth < 0):
        raise ValueError("q_fewshot needs ground-truth labels for the unlabeled pool")
    rng = np.random.default_rng(seed)
    keep: list[np.ndarray] = []
    for k in range(c):
        members = pool[truth == k]
        if members.size == 0:
            logger.warning("class %d has no unlabeled instances; skipping", k)
            continue
        keep.append(np.sort(rng.permutation(members)[:q]))
    return np.sort(np.concatenate(keep))


def _iteration_confidence(
    t: int,
    model: LinearModel | None,
    data: DataContainer,
    pool: np.ndarray,
    logits: DataContainer | None,
    seed: int,
) -> ConfidenceMatrix:
    """Pool confidence for iteration t: the trained head after the first
    iteration; before it, provided zero-shot logits when available, else a
    freshly initialized head (a weaker cold start, logged)."""
    if t > 1 and model is not None:
        return model_mod.predict_proba(model, data.rows[pool])
    if logits is not None:
        return ConfidenceMatrix.from_logits(logits.rows[pool])
    if data.kind == "logits":
        return ConfidenceMatrix.from_logits(data.rows[pool])
    logger.info("no logits container; cold start from a random head")
    cold = model_mod.init_model(data.d, data.c, seed=[seed, 0])
    return model_mod.predict_proba(cold, data.rows[pool])


def _train_iteration(
    config: RunConfig,
    data: DataContainer,
    ts: TrainingSet,
    soft_targets: np.ndarray | None,
    labeled: np.ndarray,
    t: int,
) -> tuple[LinearModel, list[float]]:
    """Train a freshly initialized head for one curriculum iteration and
    return it with the per-epoch mean loss curve."""
    cfg = config.optim
    use_labeled = config.paradigm.paradigm != "ul" and labeled.size > 0
    lam = config.paradigm.lam

    model = model_mod.init_model(data.d, data.c, seed=[config.seed, t])
    state = model_mod.OptimizerState.zeros_like(model)
    rng = np.random.default_rng([config.seed, 7, t])

    epochs_per_iter = max(1, cfg.epochs // config.big_t)
    x_ts = data.rows[ts.indices]
    if use_labeled:
        b1 = compute_b1(labeled.size, ts.m, cfg.b2)
        x_lab = data.rows[labeled]
        y_lab = data.labels[labeled]
        lab_order = rng.permutation(labeled.size)
        lab_pos = 0

    curve: list[float] = []
    for epoch in range(epochs_per_iter):
        lr = model_mod.lr_at(epoch, epochs_per_iter, cfg)
        order = rng.permutation(ts.m)
        losses: list[float] = []
        for start in range(0, ts.m, cfg.b2):
            batch = order[start : start + cfg.b2]
            uz = model_mod.logits_of(model, x_ts[batch])
            unlabeled_term = (
                uz,
                ts.targets[batch],
                soft_targets[batch] if soft_targets is not None else None,
            )
            labeled_term = None
            x_batch_lab = None
            if use_labeled:
                take = []
                for _ in range(b1):
                    if lab_pos >= lab_order.size:
                        lab_order = rng.permutation(labeled.size)
                        lab_pos = 0
                    take.append(lab_order[lab_pos])
                    lab_pos += 1
                sel = np.array(take, dtype=np.int64)
                x_batch_lab = x_lab[sel]
                labeled_term = (model_mod.logits_of(model, x_batch_lab), y_lab[sel])
            value, (g_lab, g_unl) = combined_batch_loss(
                labeled_term, unlabeled_term, lam, config.loss
            )
            grad_w = np.zeros_like(model.weights)
            grad_b = np.zeros_like(model.bias)
            if g_unl is not None:
                gw, gb = model_mod.backward(x_ts[batch], g_unl)
                grad_w += gw
                grad_b += gb
            if g_lab is not None:
                gw, gb = model_mod.backward(x_batch_lab, g_lab)
                grad_w += gw
                grad_b += gb
            model, state = model_mod.sgd_step(model, grad_w, grad_b, state, lr, cfg)
            losses.append(value)
        curve.append(float(np.mean(losses)))
    return model, curve


def _test_metrics(
    model: LinearModel,
    test: DataContainer | None,
    seen: np.ndarray | None,
) -> tuple[float | None, list[float] | None, float | None, list[list[int]] | None]:
    if test is None:
        return None, None, None, None
    probs = model_mod.predict_proba(model, test.rows)
    top1 = metrics_mod.top1_accuracy(probs, test.labels)
    per_class = metrics_mod.per_class_accuracy(probs, test.labels, test.c)
    hm = None
    if seen is not None:
        seen_mask = np.isin(test.labels, seen)
        acc_seen = (
            metrics_mod.top1_accuracy(probs.p[seen_mask], test.labels[seen_mask])
            if seen_mask.any()
            else 0.0
        )
        acc_unseen = (
            metrics_mod.top1_accuracy(probs.p[~seen_mask], test.labels[~seen_mask])
            if (~seen_mask).any()
            else 0.0
        )
        hm = harmonic_mean(acc_seen, acc_unseen)
    conf = metrics_mod.confusion(probs, test.labels, test.c)
    return top1, [float(v) for v in per_class], hm, conf.counts.tolist()


def run_cpl(
    config: RunConfig,
    data: DataContainer,
    test: DataContainer | None,
    logits: DataContainer | None = None,
    split: SplitResult | None = None,
) -> RunReport:
    """Run the full curriculum: generate candidates, select top-K per class,
    retrain from scratch, repeat ``big_t`` times."""
    if test is not None:
        if test.d != data.d or test.c != data.c:
            raise ValueError("test container shape disagrees with training data")
        if test.labels is None or np.any(test.labels < 0):
            raise ValueError("test container needs full labels")
    if logits is not None:
        if logits.kind != "logits" or logits.n != data.n or logits.c != data.c:
            raise ValueError("logits container must align row-for-row with data")

    labeled, pool, seen = _derive_split(config, data, split)
    truth = None
    if data.labels is not None:
        pool_labels = data.labels[pool]
        if np.all(pool_labels >= 0):
            truth = pool_labels
    if config.paradigm.q_fewshot is not None:
        pool = _subsample_pool(pool, truth, config.paradigm.q_fewshot, config.seed, data.c)
        truth = data.labels[pool] if truth is not None else None
    if pool.size == 0:
        raise NoTrainableInstancesError("no trainable instances: unlabeled pool is empty")

    state = CurriculumState.initial(pool.size, config.big_t, data.c)
    model: LinearModel | None = None
    records: list[IterationRecord] = []
    final_test: tuple = (None, None, None, None)

    for t in range(1, config.big_t + 1):
        conf = _iteration_confidence(t, model, data, pool, logits, config.seed)
        assign = generate_candidates(conf, config.selection)
        try:
            ts_local = topk_curriculum_select(assign, conf, state)
        except NoTrainableInstancesError as e:
            raise NoTrainableInstancesError(f"iteration {t}: {e}") from e
        ts = TrainingSet(
            indices=pool[ts_local.indices],
            targets=ts_local.targets,
            selected_by=ts_local.selected_by,
        )
        soft = None
        if config.loss.kind == "soft_ce":
            soft = np.stack(
                [
                    make_soft_target(conf.row(i), ts_local.targets[k]).y
                    for k, i in enumerate(ts_local.indices)
                ]
            )
        model, curve = _train_iteration(config, data, ts, soft, labeled, t)

        lea = lea_all = None
        if truth is not None:
            lea = metrics_mod.label_estimation_accuracy(assign, truth)
            lea_all = metrics_mod.label_estimation_accuracy(assign, truth, include_empty=True)
        top1, per_class, hm, conf_counts = _test_metrics(model, test, seen)
        final_test = (top1, per_class, hm, conf_counts)
        records.append(
            IterationRecord(
                t=t,
                tau=float(assign.tau),
                k_t=state.k_t,
                m=ts.m,
                avg_candidate_size=metrics_mod.avg_candidate_size(assign),
                label_estimation_accuracy=lea,
                label_estimation_accuracy_all=lea_all,
                train_loss=curve,
                test_top1=top1,
                per_class_accuracy=per_class,
                class_frequency=[int(v) for v in metrics_mod.class_frequency(assign)],
                harmonic_mean=hm,
            )
        )
        if t < config.big_t:
            state = state.advanced()

    return RunReport(
        config=_config_echo(config),
        records=records,
        final={"test_top1": final_test[0], "harmonic_mean": final_test[2]},
        final_confusion=final_test[3],
        final_model=model,
    )
