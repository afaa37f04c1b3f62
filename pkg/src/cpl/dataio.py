"""Container I/O and the synthetic benchmark generator.

The binary container layout (all little-endian):

  offset 0   magic   "CPLE" (4 bytes)
  offset 4   version u32, currently 1
  offset 8   kind    u8: 0 = features, 1 = logits
  offset 9   n       u64 rows
  offset 17  d       u32 columns
  offset 21  c       u32 classes
  offset 25  has_labels u8
  offset 26  payload n*d float32 row-major, then (if has_labels) n int32
             labels with -1 for unlabeled, then an optional UTF-8 JSON
             sidecar holding {"class_names": [...]}

Storage is float32; everything upcasts to float64 in memory, so re-saving a
loaded container is byte-identical.  A CSV fallback (header ``f0..f{D-1},label``)
covers interchange with spreadsheet-shaped tooling.
"""
from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

from .core import DataContainer, KINDS

_MAGIC = b"CPLE"
_VERSION = 1
_HEADER = struct.Struct("<4sIBQIIB")


class ContainerFormatError(ValueError):
    """Malformed container file; the message carries the byte offset."""


def save_container(container: DataContainer, path) -> None:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        save_csv(container, path)
        return
    kind_code = KINDS.index(container.kind)
    has_labels = container.labels is not None
    blob = bytearray()
    blob += _HEADER.pack(
        _MAGIC, _VERSION, kind_code, container.n, container.d, container.c, int(has_labels)
    )
    blob += container.rows.astype("<f4").tobytes(order="C")
    if has_labels:
        blob += container.labels.astype("<i4").tobytes()
    if container.class_names is not None:
        blob += json.dumps({"class_names": container.class_names}, sort_keys=True).encode("utf-8")
    path.write_bytes(bytes(blob))


def load_container(path) -> DataContainer:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return load_csv(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise ContainerFormatError(
            f"truncated header: need {_HEADER.size} bytes, file ends at byte offset {len(raw)}"
        )
    magic, version, kind_code, n, d, c, has_labels = _HEADER.unpack_from(raw, 0)
    if magic != _MAGIC:
        raise ContainerFormatError(f"bad magic {magic!r} at byte offset 0")
    if version != _VERSION:
        raise ContainerFormatError(f"unsupported version {version} at byte offset 4")
    if kind_code not in (0, 1):
        raise ContainerFormatError(f"unknown kind byte {kind_code} at byte offset 8")
    if has_labels not in (0, 1):
        raise ContainerFormatError(f"invalid has_labels byte {has_labels} at byte offset 25")
    offset = _HEADER.size
    need_rows = n * d * 4
    if len(raw) < offset + need_rows:
        raise ContainerFormatError(
            f"truncated payload: need {need_rows} row bytes from byte offset {offset}, "
            f"file ends at byte offset {len(raw)}"
        )
    rows = np.frombuffer(raw, dtype="<f4", count=n * d, offset=offset).reshape(n, d)
    offset += need_rows
    labels = None
    if has_labels:
        need_labels = n * 4
        if len(raw) < offset + need_labels:
            raise ContainerFormatError(
                f"truncated labels: need {need_labels} bytes from byte offset {offset}, "
                f"file ends at byte offset {len(raw)}"
            )
        labels = np.frombuffer(raw, dtype="<i4", count=n, offset=offset).astype(np.int64)
        offset += need_labels
    class_names = None
    if offset < len(raw):
        try:
            sidecar = json.loads(raw[offset:].decode("utf-8"))
            class_names = list(sidecar["class_names"])
        except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError) as e:
            raise ContainerFormatError(
                f"invalid sidecar at byte offset {offset}: {e}"
            ) from e
    return DataContainer(
        kind=KINDS[kind_code],
        rows=rows.astype(np.float64),
        c=c,
        labels=labels,
        class_names=class_names,
    )


def save_csv(container: DataContainer, path) -> None:
    """Spreadsheet fallback; a missing labels array is written as all -1."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"f{j}" for j in range(container.d)] + ["label"])
        labels = (
            container.labels
            if container.labels is not None
            else np.full(container.n, -1, dtype=np.int64)
        )
        rows32 = container.rows.astype(np.float32)
        for i in range(container.n):
            writer.writerow([repr(float(v)) for v in rows32[i]] + [int(labels[i])])


def load_csv(path, kind: str = "features", c: int | None = None) -> DataContainer:
    """Load the CSV fallback; the class count is inferred from the labels
    unless given explicitly."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ContainerFormatError(f"{path}: empty CSV") from None
        d = len(header) - 1
        expected = [f"f{j}" for j in range(d)] + ["label"]
        if header != expected:
            raise ContainerFormatError(
                f"{path}: bad CSV header {header[:3]}...; expected f0..f{d - 1},label"
            )
        rows = []
        labels = []
        for line, rec in enumerate(reader, start=2):
            if len(rec) != d + 1:
                raise ContainerFormatError(f"{path}:{line}: expected {d + 1} fields")
            rows.append([float(v) for v in rec[:d]])
            labels.append(int(rec[d]))
    labels_arr = np.array(labels, dtype=np.int64)
    if c is None:
        if np.all(labels_arr < 0):
            raise ContainerFormatError(
                f"{path}: cannot infer the class count from all-unlabeled rows; pass c"
            )
        c = int(labels_arr.max()) + 1
    return DataContainer(
        kind=kind,
        rows=np.array(rows, dtype=np.float32).astype(np.float64),
        c=c,
        labels=labels_arr,
    )


def make_synthetic(
    n_per_class: int,
    c: int,
    d: int,
    separation: float,
    confusion_bias: np.ndarray,
    seed: int,
    variant: int = 0,
    logit_scale: float | None = None,
) -> tuple[DataContainer, DataContainer]:
    """Gaussian class blobs plus simulated miscalibrated zero-shot logits.

    Features: unit-covariance blobs with class means at ``separation`` times
    random unit directions.  Logits: ``logit_scale`` (default separation/2) on
    the true class, plus the per-class additive ``confusion_bias``, plus unit
    Gaussian noise; a positive bias entry makes that class absorb
    mispredictions the way a miscalibrated zero-shot model does.

    ``variant`` selects an independent instance-noise stream over the same
    class geometry, which is how matching test sets are drawn.
    """
    if c < 2:
        raise ValueError("need at least 2 classes")
    if separation <= 0:
        raise ValueError("separation must be positive")
    bias = np.asarray(confusion_bias, dtype=np.float64)
    if bias.shape != (c,):
        raise ValueError(f"confusion_bias must have shape ({c},)")
    if logit_scale is None:
        logit_scale = separation / 2.0

    mean_rng = np.random.default_rng([seed, 17])
    directions = mean_rng.standard_normal((c, d))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    means = separation * directions

    rng = np.random.default_rng([seed, 23, variant])
    n = n_per_class * c
    labels = np.repeat(np.arange(c, dtype=np.int64), n_per_class)
    features = means[labels] + rng.standard_normal((n, d))
    logits = (
        logit_scale * np.eye(c)[labels]
        + bias[np.newaxis, :]
        + rng.standard_normal((n, c))
    )
    perm = rng.permutation(n)
    features_c = DataContainer(
        kind="features", rows=features[perm], c=c, labels=labels[perm]
    )
    logits_c = DataContainer(kind="logits", rows=logits[perm], c=c, labels=labels[perm])
    return features_c, logits_c
