"""End-to-end self-training loop: curriculum sizing, reports, invariants."""
import json
import logging

import numpy as np
import pytest

from cpl.core import (
    DataContainer,
    NoTrainableInstancesError,
    OptimConfig,
    ParadigmSpec,
    SelectionParams,
)
from cpl.losses import LossKind
from cpl.dataio import make_synthetic
from cpl.paradigms import split_ssl, split_trzsl
from cpl.trainer import (
    RunConfig,
    compute_b1,
    fewshot_unlabeled_subsample,
    run_cpl,
)


def biased_data(seed=0, n_per_class=40, c=4, d=8, bias_at=1, bias=2.5, scale=1.0):
    vec = np.zeros(c)
    vec[bias_at] = bias
    feats, logits = make_synthetic(
        n_per_class, c, d, separation=3.0, confusion_bias=vec, seed=seed, logit_scale=scale
    )
    test, _ = make_synthetic(
        n_per_class, c, d, separation=3.0, confusion_bias=vec, seed=seed,
        logit_scale=scale, variant=1,
    )
    return feats, logits, test


def clean_data(seed=0, n_per_class=50, c=4, d=8):
    return biased_data(seed=seed, n_per_class=n_per_class, c=c, d=d, bias=0.0, scale=1.5)


def ul_config(big_t=3, loss="cc", alpha=0.6, beta=None, seed=0, epochs=24):
    return RunConfig(
        paradigm=ParadigmSpec(paradigm="ul"),
        selection=SelectionParams(alpha=alpha, beta=beta),
        loss=LossKind(loss),
        optim=OptimConfig(epochs=epochs),
        big_t=big_t,
        seed=seed,
    )


class TestComputeB1:
    def test_worked_example(self):
        assert compute_b1(200, 6400, 64) == 2

    def test_equal_sizes_give_b2(self):
        assert compute_b1(500, 500, 64) == 64

    def test_clamped_to_one(self):
        assert compute_b1(1, 100000, 64) == 1

    def test_half_rounds_up(self):
        # 3/128 * 64 = 1.5 -> 2
        assert compute_b1(3, 128, 64) == 2


class TestFewshotSubsample:
    def _box(self, seed=0):
        feats, _, _ = biased_data(seed=seed, n_per_class=30, c=3)
        return feats

    def test_cap_per_class(self):
        box = self._box()
        capped = fewshot_unlabeled_subsample(box, q=16, seed=0)
        assert capped.n == 48
        assert np.all(capped.labels == -1)

    def test_identity_membership_when_q_large(self):
        box = self._box()
        capped = fewshot_unlabeled_subsample(box, q=100, seed=0)
        assert capped.n == box.n
        np.testing.assert_array_equal(
            np.sort(capped.rows, axis=0), np.sort(box.rows, axis=0)
        )

    def test_deterministic(self):
        box = self._box()
        a = fewshot_unlabeled_subsample(box, q=5, seed=3)
        b = fewshot_unlabeled_subsample(box, q=5, seed=3)
        np.testing.assert_array_equal(a.rows, b.rows)
        c = fewshot_unlabeled_subsample(box, q=5, seed=4)
        assert not np.array_equal(a.rows, c.rows)

    def test_requires_truth(self):
        box = self._box()
        masked = DataContainer(kind="features", rows=box.rows, c=box.c)
        with pytest.raises(ValueError, match="ground-truth"):
            fewshot_unlabeled_subsample(masked, q=4, seed=0)

    def test_empty_class_warned(self, caplog):
        rows = np.random.default_rng(0).normal(size=(6, 2)).astype(np.float32)
        labels = np.array([0, 0, 0, 2, 2, 2])
        box = DataContainer(kind="features", rows=rows, c=3, labels=labels)
        with caplog.at_level(logging.WARNING, logger="cpl.trainer"):
            capped = fewshot_unlabeled_subsample(box, q=2, seed=0)
        assert "class 1" in caplog.text
        assert capped.n == 4


class TestCurriculumSizing:
    def test_k_schedule_in_report(self):
        feats, logits, test = biased_data()
        report = run_cpl(ul_config(big_t=4), feats, test, logits=logits)
        # 160 instances, T=4, C=4 -> delta 10; K_t = 10, 20, 30, 40
        assert [r.k_t for r in report.records] == [10, 20, 30, 40]
        assert [r.t for r in report.records] == [1, 2, 3, 4]

    def test_m_bounded_by_k_schedule(self):
        feats, logits, test = biased_data()
        report = run_cpl(ul_config(big_t=4), feats, test, logits=logits)
        for r in report.records:
            assert r.m <= r.k_t * feats.c
            assert r.m >= 1

    def test_m_nondecreasing_with_beta_off(self):
        feats, logits, test = biased_data()
        report = run_cpl(ul_config(big_t=4, beta=None), feats, test, logits=logits)
        sizes = [r.m for r in report.records]
        assert all(a <= b for a, b in zip(sizes, sizes[1:]))


class TestReportContract:
    def test_serialization_byte_identical(self):
        feats, logits, test = biased_data()
        a = run_cpl(ul_config(), feats, test, logits=logits).to_json()
        b = run_cpl(ul_config(), feats, test, logits=logits).to_json()
        assert a == b

    def test_doc_shape(self):
        feats, logits, test = biased_data()
        report = run_cpl(ul_config(big_t=2), feats, test, logits=logits)
        doc = json.loads(report.to_json())
        assert set(doc) == {"config", "per_iteration", "final"}
        assert len(doc["per_iteration"]) == 2
        row = doc["per_iteration"][0]
        for key in (
            "t", "tau", "k_t", "m", "avg_candidate_size",
            "label_estimation_accuracy", "train_loss", "test_top1",
            "per_class_accuracy", "class_frequency",
        ):
            assert key in row
        assert set(doc["final"]) == {"test_top1", "harmonic_mean"}

    def test_final_model_excluded_from_doc(self):
        feats, logits, test = biased_data()
        report = run_cpl(ul_config(big_t=2), feats, test, logits=logits)
        assert report.final_model is not None
        assert "final_model" not in report.to_json()

    def test_no_test_container_gives_null_metrics(self):
        feats, logits, _ = biased_data()
        report = run_cpl(ul_config(big_t=2), feats, None, logits=logits)
        assert report.final["test_top1"] is None
        assert all(r.test_top1 is None for r in report.records)
        assert all(r.train_loss is not None for r in report.records)


class TestUnlabeledParadigm:
    def test_truth_only_feeds_metrics(self):
        # permuting the hidden truth must not change training at all
        feats, logits, test = biased_data(seed=3)
        rng = np.random.default_rng(9)
        shuffled = DataContainer(
            kind=feats.kind,
            rows=feats.rows,
            c=feats.c,
            labels=feats.labels[rng.permutation(feats.n)],
        )
        a = run_cpl(ul_config(seed=5), feats, test, logits=logits)
        b = run_cpl(ul_config(seed=5), shuffled, test, logits=logits)
        assert [r.train_loss for r in a.records] == [r.train_loss for r in b.records]
        assert [r.test_top1 for r in a.records] == [r.test_top1 for r in b.records]
        assert [r.tau for r in a.records] == [r.tau for r in b.records]
        lea_a = [r.label_estimation_accuracy for r in a.records]
        lea_b = [r.label_estimation_accuracy for r in b.records]
        assert lea_a != lea_b

    def test_masked_pool_runs_without_lea(self):
        feats, logits, test = biased_data(seed=4)
        masked = DataContainer(kind="features", rows=feats.rows, c=feats.c)
        report = run_cpl(ul_config(big_t=2), masked, test, logits=logits)
        assert all(r.label_estimation_accuracy is None for r in report.records)
        assert report.final["test_top1"] is not None

    def test_label_estimation_improves(self):
        # miscalibrated 10-class start: the curriculum should clean it up
        lea_first, lea_final, top_first, top_final = [], [], [], []
        for seed in range(3):
            feats, logits, test = biased_data(
                seed=seed, n_per_class=50, c=10, d=32, bias_at=9, bias=3.0
            )
            report = run_cpl(
                ul_config(big_t=3, beta=0.9, seed=seed, epochs=30),
                feats, test, logits=logits,
            )
            lea = [r.label_estimation_accuracy for r in report.records]
            tops = [r.test_top1 for r in report.records]
            lea_first.append(lea[0])
            lea_final.append(lea[-1])
            top_first.append(tops[0])
            top_final.append(tops[-1])
        assert np.mean(lea_final) > np.mean(lea_first)
        assert np.mean(top_final) > np.mean(top_first)

    def test_test_accuracy_well_above_chance(self):
        feats, logits, test = clean_data(seed=1)
        report = run_cpl(ul_config(big_t=3, epochs=50), feats, test, logits=logits)
        assert report.final["test_top1"] >= 0.5


class TestSslParadigm:
    def test_runs_with_explicit_split(self):
        feats, _, test = clean_data(seed=2)
        split = split_ssl(feats, labeled_per_class=2, seed=0)
        config = RunConfig(
            paradigm=ParadigmSpec(paradigm="ssl", labeled_per_class=2, lam=1.0),
            selection=SelectionParams(alpha=0.6),
            loss=LossKind("cc"),
            optim=OptimConfig(epochs=24),
            big_t=2,
            seed=0,
        )
        report = run_cpl(config, feats, test, split=split)
        assert report.final["test_top1"] is not None
        assert report.final["harmonic_mean"] is None
        for r in report.records:
            assert np.all(np.isfinite(r.train_loss))

    def test_sentinel_labels_define_split(self):
        # without an explicit split, rows with the -1 sentinel form the pool
        feats, _, test = clean_data(seed=2)
        masked_labels = feats.labels.copy()
        keep = np.concatenate(
            [np.flatnonzero(feats.labels == cls)[:2] for cls in range(feats.c)]
        )
        mask = np.ones(feats.n, dtype=bool)
        mask[keep] = False
        masked_labels[mask] = -1
        partial = DataContainer(
            kind="features", rows=feats.rows, c=feats.c, labels=masked_labels
        )
        config = RunConfig(
            paradigm=ParadigmSpec(paradigm="ssl"),
            selection=SelectionParams(alpha=0.6),
            loss=LossKind("cc"),
            optim=OptimConfig(epochs=12),
            big_t=2,
            seed=0,
        )
        report = run_cpl(config, partial, test)
        assert len(report.records) == 2
        # pool truth is hidden by the sentinel, so set quality is unknowable
        assert all(r.label_estimation_accuracy is None for r in report.records)

    def test_q_fewshot_shrinks_pool(self):
        feats, _, test = clean_data(seed=2)
        split = split_ssl(feats, labeled_per_class=2, seed=0)
        base = RunConfig(
            paradigm=ParadigmSpec(paradigm="ssl", q_fewshot=8),
            selection=SelectionParams(alpha=0.6),
            loss=LossKind("cc"),
            optim=OptimConfig(epochs=12),
            big_t=2,
            seed=0,
        )
        report = run_cpl(base, feats, test, split=split)
        # pool capped at 8 per class = 32; training set can never exceed it
        assert all(r.m <= 32 for r in report.records)


class TestTrzslParadigm:
    def test_harmonic_mean_reported(self):
        feats, _, test = clean_data(seed=6, n_per_class=30, c=8)
        split = split_trzsl(feats, seen_fraction=0.62, seed=0)
        config = RunConfig(
            paradigm=ParadigmSpec(paradigm="trzsl", seen_fraction=0.62),
            selection=SelectionParams(alpha=0.6),
            loss=LossKind("cc"),
            optim=OptimConfig(epochs=12),
            big_t=2,
            seed=0,
        )
        report = run_cpl(config, feats, test, split=split)
        hm = report.final["harmonic_mean"]
        assert hm is not None and 0.0 <= hm <= 1.0
        assert all(r.harmonic_mean is not None for r in report.records)
        assert split.seen_classes.size == 5 and split.unseen_classes.size == 3


class TestLossVariants:
    @pytest.mark.parametrize("loss", ["cc", "rc", "cav", "lw", "soft_ce"])
    def test_all_losses_complete(self, loss):
        feats, logits, test = clean_data(seed=7)
        report = run_cpl(ul_config(big_t=2, loss=loss, epochs=24), feats, test, logits=logits)
        assert len(report.records) == 2
        for r in report.records:
            assert np.all(np.isfinite(r.train_loss))
        assert report.final["test_top1"] > 0.35


class TestDegenerateSelection:
    def test_alpha_zero_t1_singletons(self):
        feats, logits, test = biased_data(seed=8)
        config = ul_config(big_t=1, alpha=0.0, epochs=12)
        report = run_cpl(config, feats, test, logits=logits)
        r = report.records[0]
        assert r.avg_candidate_size == pytest.approx(1.0)
        # per-class cap truncates exactly where singleton counts exceed K_1
        assert r.m == sum(min(f, r.k_t) for f in r.class_frequency)

    def test_beta_one_starves_training(self):
        feats, logits, test = biased_data(seed=8)
        with pytest.raises(NoTrainableInstancesError, match="iteration 1"):
            run_cpl(ul_config(big_t=2, beta=1.0), feats, test, logits=logits)

    def test_empty_pool_rejected(self):
        feats, _, test = biased_data(seed=2, n_per_class=2)
        config = RunConfig(
            paradigm=ParadigmSpec(paradigm="ssl", labeled_per_class=2),
            selection=SelectionParams(alpha=0.6),
            loss=LossKind("cc"),
            optim=OptimConfig(epochs=4),
            big_t=1,
            seed=0,
        )
        with pytest.raises(NoTrainableInstancesError, match="pool is empty"):
            run_cpl(config, feats, test)


class TestValidation:
    def test_test_shape_mismatch(self):
        feats, logits, _ = biased_data()
        bad_test, _ = make_synthetic(5, 4, 9, 3.0, np.zeros(4), seed=0)
        with pytest.raises(ValueError, match="test container"):
            run_cpl(ul_config(), feats, bad_test, logits=logits)

    def test_logits_alignment(self):
        feats, logits, test = biased_data()
        short = DataContainer(
            kind="logits", rows=logits.rows[:-1], c=logits.c, labels=logits.labels[:-1]
        )
        with pytest.raises(ValueError, match="row-for-row"):
            run_cpl(ul_config(), feats, test, logits=short)

    def test_logits_kind_required(self):
        feats, _, test = biased_data()
        with pytest.raises(ValueError, match="logits"):
            run_cpl(ul_config(), feats, test, logits=feats)
