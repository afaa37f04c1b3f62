"""Binary container format, CSV fallback, synthetic generator."""
import json
import struct

import numpy as np
import pytest

from cpl.core import DataContainer, UNLABELED
from cpl.dataio import (
    ContainerFormatError,
    load_container,
    load_csv,
    make_synthetic,
    save_container,
    save_csv,
)
from cpl.metrics import confusion, top1_accuracy


def sample_box(n=7, d=3, c=4, seed=0, with_labels=True, kind="features", names=False):
    rng = np.random.default_rng(seed)
    rows = rng.normal(size=(n, d)).astype(np.float32)
    labels = rng.integers(0, c, size=n) if with_labels else None
    if with_labels:
        labels[0] = UNLABELED
    class_names = [f"class_{i}" for i in range(c)] if names else None
    return DataContainer(kind=kind, rows=rows, c=c, labels=labels, class_names=class_names)


class TestBinaryRoundTrip:
    def test_features_round_trip(self, tmp_path):
        box = sample_box()
        path = tmp_path / "data.cple"
        save_container(box, path)
        loaded = load_container(path)
        assert loaded.kind == box.kind
        assert loaded.c == box.c
        np.testing.assert_array_equal(loaded.rows, box.rows)
        np.testing.assert_array_equal(loaded.labels, box.labels)
        assert loaded.class_names is None

    def test_logits_kind_survives(self, tmp_path):
        box = sample_box(kind="logits", d=4, c=4)
        path = tmp_path / "z.cple"
        save_container(box, path)
        assert load_container(path).kind == "logits"

    def test_unlabeled_round_trip(self, tmp_path):
        box = sample_box(with_labels=False)
        path = tmp_path / "u.cple"
        save_container(box, path)
        loaded = load_container(path)
        assert loaded.labels is None

    def test_sidecar_names(self, tmp_path):
        box = sample_box(names=True)
        path = tmp_path / "named.cple"
        save_container(box, path)
        loaded = load_container(path)
        assert loaded.class_names == [f"class_{i}" for i in range(4)]

    def test_resave_byte_identical(self, tmp_path):
        box = sample_box(names=True)
        p1 = tmp_path / "a.cple"
        p2 = tmp_path / "b.cple"
        save_container(box, p1)
        save_container(load_container(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()


class TestBinaryLayout:
    def test_header_fields(self, tmp_path):
        box = sample_box(n=5, d=3, c=4)
        path = tmp_path / "h.cple"
        save_container(box, path)
        raw = path.read_bytes()
        magic, version, kind, n, d, c, has_labels = struct.unpack_from("<4sIBQIIB", raw, 0)
        assert magic == b"CPLE"
        assert version == 1
        assert kind == 0
        assert (n, d, c) == (5, 3, 4)
        assert has_labels == 1

    def test_payload_layout(self, tmp_path):
        box = sample_box(n=2, d=2, c=3)
        path = tmp_path / "p.cple"
        save_container(box, path)
        raw = path.read_bytes()
        header = struct.calcsize("<4sIBQIIB")
        rows = np.frombuffer(raw, dtype="<f4", count=4, offset=header).reshape(2, 2)
        np.testing.assert_array_equal(rows, box.rows)
        labels = np.frombuffer(raw, dtype="<i4", count=2, offset=header + 16)
        np.testing.assert_array_equal(labels, box.labels)
        sidecar = raw[header + 16 + 8 :]
        assert sidecar == b""

    def test_sidecar_is_json(self, tmp_path):
        box = sample_box(n=2, d=2, c=3, names=True)
        path = tmp_path / "s.cple"
        save_container(box, path)
        raw = path.read_bytes()
        header = struct.calcsize("<4sIBQIIB")
        sidecar = raw[header + 16 + 8 :]
        assert json.loads(sidecar.decode("utf-8")) == {
            "class_names": ["class_0", "class_1", "class_2"]
        }


class TestBinaryErrors:
    def _valid_bytes(self, tmp_path):
        path = tmp_path / "v.cple"
        save_container(sample_box(n=3, d=2, c=2), path)
        return path, bytearray(path.read_bytes())

    def test_truncated_header(self, tmp_path):
        path, raw = self._valid_bytes(tmp_path)
        path.write_bytes(raw[:10])
        with pytest.raises(ContainerFormatError, match="header"):
            load_container(path)

    def test_bad_magic_offset_zero(self, tmp_path):
        path, raw = self._valid_bytes(tmp_path)
        raw[0:4] = b"NOPE"
        path.write_bytes(raw)
        with pytest.raises(ContainerFormatError, match="offset 0"):
            load_container(path)

    def test_bad_version_offset_four(self, tmp_path):
        path, raw = self._valid_bytes(tmp_path)
        raw[4:8] = struct.pack("<I", 9)
        path.write_bytes(raw)
        with pytest.raises(ContainerFormatError, match="offset 4"):
            load_container(path)

    def test_bad_kind_offset_eight(self, tmp_path):
        path, raw = self._valid_bytes(tmp_path)
        raw[8] = 7
        path.write_bytes(raw)
        with pytest.raises(ContainerFormatError, match="offset 8"):
            load_container(path)

    def test_bad_label_flag_offset(self, tmp_path):
        path, raw = self._valid_bytes(tmp_path)
        raw[25] = 3
        path.write_bytes(raw)
        with pytest.raises(ContainerFormatError, match="offset 25"):
            load_container(path)

    def test_truncated_rows_reports_offset(self, tmp_path):
        path, raw = self._valid_bytes(tmp_path)
        header = struct.calcsize("<4sIBQIIB")
        path.write_bytes(raw[: header + 5])
        with pytest.raises(ContainerFormatError, match=f"offset {header}"):
            load_container(path)

    def test_truncated_labels_reports_offset(self, tmp_path):
        path, raw = self._valid_bytes(tmp_path)
        header = struct.calcsize("<4sIBQIIB")
        rows_end = header + 3 * 2 * 4
        path.write_bytes(raw[: rows_end + 2])
        with pytest.raises(ContainerFormatError, match=f"offset {rows_end}"):
            load_container(path)

    def test_invalid_sidecar(self, tmp_path):
        path, raw = self._valid_bytes(tmp_path)
        path.write_bytes(bytes(raw) + b"{broken")
        with pytest.raises(ContainerFormatError, match="sidecar"):
            load_container(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_container(tmp_path / "absent.cple")


class TestCsv:
    def test_round_trip_equals_binary(self, tmp_path):
        box = sample_box(n=9, d=4, c=3)
        csv_path = tmp_path / "d.csv"
        bin_path = tmp_path / "d.cple"
        save_container(box, csv_path)
        save_container(box, bin_path)
        from_csv = load_container(csv_path)
        from_bin = load_container(bin_path)
        np.testing.assert_array_equal(from_csv.rows, from_bin.rows)
        np.testing.assert_array_equal(from_csv.labels, from_bin.labels)
        assert from_csv.c == from_bin.c

    def test_header_line(self, tmp_path):
        box = sample_box(n=2, d=3, c=2)
        path = tmp_path / "h.csv"
        save_csv(box, path)
        first = path.read_text().splitlines()[0]
        assert first == "f0,f1,f2,label"

    def test_unlabeled_saved_as_sentinel(self, tmp_path):
        box = sample_box(n=3, d=2, c=2, with_labels=False)
        path = tmp_path / "u.csv"
        save_csv(box, path)
        lines = path.read_text().splitlines()
        assert all(line.endswith(",-1") for line in lines[1:])

    def test_all_unlabeled_needs_c(self, tmp_path):
        box = sample_box(n=3, d=2, c=2, with_labels=False)
        path = tmp_path / "u.csv"
        save_csv(box, path)
        with pytest.raises(ValueError, match="class count"):
            load_csv(path)
        loaded = load_csv(path, c=2)
        assert loaded.c == 2
        np.testing.assert_array_equal(loaded.labels, [-1, -1, -1])

    def test_inferred_c(self, tmp_path):
        box = sample_box(n=20, d=2, c=4, seed=3)
        box.labels[:] = np.arange(20) % 4
        path = tmp_path / "i.csv"
        save_csv(box, path)
        assert load_csv(path).c == 4

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("x,y,label\n1,2,0\n")
        with pytest.raises(ContainerFormatError, match="header"):
            load_csv(path)

    def test_float32_values_preserved_exactly(self, tmp_path):
        rng = np.random.default_rng(4)
        rows = (rng.normal(size=(5, 3)) * 1e-3).astype(np.float32)
        box = DataContainer(kind="features", rows=rows, c=2, labels=np.zeros(5, dtype=np.int64))
        path = tmp_path / "exact.csv"
        save_csv(box, path)
        np.testing.assert_array_equal(load_csv(path, c=2).rows, rows)


class TestSynthetic:
    def test_shapes_and_kinds(self):
        feats, logits = make_synthetic(
            n_per_class=10, c=3, d=5, separation=2.0, confusion_bias=np.zeros(3), seed=0
        )
        assert feats.kind == "features" and logits.kind == "logits"
        assert feats.rows.shape == (30, 5)
        assert logits.rows.shape == (30, 3)
        np.testing.assert_array_equal(feats.labels, logits.labels)
        np.testing.assert_array_equal(np.bincount(feats.labels, minlength=3), [10, 10, 10])

    def test_deterministic(self):
        a = make_synthetic(8, 4, 6, 3.0, np.zeros(4), seed=5)
        b = make_synthetic(8, 4, 6, 3.0, np.zeros(4), seed=5)
        np.testing.assert_array_equal(a[0].rows, b[0].rows)
        np.testing.assert_array_equal(a[1].rows, b[1].rows)
        c = make_synthetic(8, 4, 6, 3.0, np.zeros(4), seed=6)
        assert not np.array_equal(a[0].rows, c[0].rows)

    def test_high_separation_logits_nearly_perfect(self):
        _, logits = make_synthetic(50, 5, 8, separation=8.0, confusion_bias=np.zeros(5), seed=1)
        acc = top1_accuracy(logits.rows.argmax(axis=1), logits.labels)
        assert acc >= 0.95

    def test_bias_column_dominates_confusion(self):
        bias = np.zeros(6)
        bias[4] = 4.0
        _, logits = make_synthetic(100, 6, 8, separation=3.0, confusion_bias=bias, seed=2)
        preds = logits.rows.argmax(axis=1)
        cm = confusion(preds, logits.labels, c=6)
        off_diag = cm.counts - np.diag(np.diag(cm.counts))
        # errors pile into the biased column
        assert off_diag[:, 4].sum() > 0.5 * off_diag.sum()

    def test_variant_shares_geometry(self):
        feats_a, _ = make_synthetic(30, 4, 6, 3.0, np.zeros(4), seed=7, variant=0)
        feats_b, _ = make_synthetic(30, 4, 6, 3.0, np.zeros(4), seed=7, variant=1)
        assert not np.array_equal(feats_a.rows, feats_b.rows)
        # same class means (instance noise differs, geometry matches)
        for cls in range(4):
            mu_a = feats_a.rows[feats_a.labels == cls].mean(axis=0)
            mu_b = feats_b.rows[feats_b.labels == cls].mean(axis=0)
            assert np.linalg.norm(mu_a - mu_b) < 1.5

    def test_logit_scale_controls_confidence(self):
        _, weak = make_synthetic(50, 4, 6, 3.0, np.zeros(4), seed=8, logit_scale=0.2)
        _, strong = make_synthetic(50, 4, 6, 3.0, np.zeros(4), seed=8, logit_scale=5.0)
        from cpl.core import softmax_rows

        weak_conf = softmax_rows(weak.rows.astype(np.float64)).max(axis=1).mean()
        strong_conf = softmax_rows(strong.rows.astype(np.float64)).max(axis=1).mean()
        assert strong_conf > weak_conf + 0.2

    def test_zero_bias_statistics_over_seeds(self):
        # unbiased generator: per-class prediction counts stay balanced
        counts = np.zeros(4)
        for seed in range(10):
            _, logits = make_synthetic(40, 4, 6, separation=4.0, confusion_bias=np.zeros(4), seed=seed)
            counts += np.bincount(logits.rows.argmax(axis=1), minlength=4)
        share = counts / counts.sum()
        assert np.all(np.abs(share - 0.25) < 0.05)
