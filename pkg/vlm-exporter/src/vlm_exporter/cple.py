"""Writer/reader for the CPLE container format.

Independent implementation of the published byte layout so the exporter
shares nothing with the training engine but the format itself:

    offset 0   magic   ``CPLE``
    offset 4   version u32 little-endian, currently 1
    offset 8   kind    u8 (0 features, 1 logits)
    offset 9   n       u64
    offset 17  d       u32
    offset 21  c       u32
    offset 25  has_labels u8
    offset 26  n*d float32 rows (row-major), then n int32 labels when
               has_labels, then an optional UTF-8 JSON sidecar
               ``{"class_names": [...]}``

Labels use -1 as the unlabeled sentinel.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"CPLE"
VERSION = 1
HEADER = struct.Struct("<4sIBQIIB")
KIND_CODES = {"features": 0, "logits": 1}
UNLABELED = -1


def write_container(
    path: str | Path,
    kind: str,
    rows: np.ndarray,
    c: int,
    labels: np.ndarray | None = None,
    class_names: list[str] | None = None,
) -> None:
    rows = np.ascontiguousarray(rows, dtype="<f4")
    if rows.ndim != 2:
        raise ValueError("rows must be 2-D")
    n, d = rows.shape
    if kind not in KIND_CODES:
        raise ValueError(f"unknown kind {kind!r}")
    if labels is not None:
        labels = np.asarray(labels, dtype="<i4")
        if labels.shape != (n,):
            raise ValueError("labels length must match rows")
        if labels.max(initial=UNLABELED) >= c or labels.min(initial=0) < UNLABELED:
            raise ValueError("labels out of range")
    blob = bytearray()
    blob += HEADER.pack(MAGIC, VERSION, KIND_CODES[kind], n, d, c, int(labels is not None))
    blob += rows.tobytes(order="C")
    if labels is not None:
        blob += labels.tobytes()
    if class_names is not None:
        blob += json.dumps({"class_names": class_names}, sort_keys=True).encode("utf-8")
    Path(path).write_bytes(bytes(blob))


def read_container(path: str | Path):
    """Return (kind, rows, c, labels, class_names); used for self-checks."""
    raw = Path(path).read_bytes()
    if len(raw) < HEADER.size:
        raise ValueError("truncated header")
    magic, version, kind_code, n, d, c, has_labels = HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise ValueError("bad magic at byte offset 0")
    if version != VERSION:
        raise ValueError(f"unsupported version {version} at byte offset 4")
    codes = {v: k for k, v in KIND_CODES.items()}
    if kind_code not in codes:
        raise ValueError(f"unknown kind byte {kind_code} at byte offset 8")
    offset = HEADER.size
    rows = np.frombuffer(raw, dtype="<f4", count=n * d, offset=offset).reshape(n, d)
    offset += n * d * 4
    labels = None
    if has_labels:
        labels = np.frombuffer(raw, dtype="<i4", count=n, offset=offset)
        offset += n * 4
    names = None
    if offset < len(raw):
        names = json.loads(raw[offset:].decode("utf-8"))["class_names"]
    return codes[kind_code], rows.copy(), c, labels.copy() if labels is not None else None, names
