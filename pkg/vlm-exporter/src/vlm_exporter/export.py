"""Export orchestration: walk the dataset, encode, write containers."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .backends import resolve_backend
from .cple import write_container
from .dataset import scan_dataset
from .manifest import ExportManifest

logger = logging.getLogger(__name__)


@dataclass
class ExportResult:
    manifest: ExportManifest
    n_exported: int
    n_skipped: int


def _load_image(path: Path, size: int) -> np.ndarray:
    with Image.open(path) as img:
        rgb = img.convert("RGB").resize((size, size), Image.BILINEAR)
    return np.asarray(rgb, dtype=np.float32) / 255.0


def export(manifest: ExportManifest, backend=None) -> ExportResult:
    """Encode every readable image and write the three output files.

    Unreadable images are skipped with their index logged; the manifest
    written to disk records their paths.
    """
    if backend is None:
        backend = resolve_backend(manifest.model)
    index = scan_dataset(manifest.dataset_path)
    if index.class_names != manifest.class_names:
        raise ValueError(
            f"dataset classes {index.class_names} disagree with manifest "
            f"{manifest.class_names}"
        )

    images, labels, skipped = [], [], []
    for i, (path, label) in enumerate(zip(index.paths, index.labels)):
        try:
            images.append(_load_image(path, backend.input_size))
        except Exception:
            logger.warning("skipping unreadable image %d: %s", i, path)
            skipped.append(str(path))
            continue
        labels.append(label)
    if not images:
        raise ValueError("no readable images to export")

    features = backend.encode_images(np.stack(images))
    texts = backend.encode_texts(manifest.class_names, manifest.template)
    logits = (manifest.logit_scale * (features.astype(np.float64) @ texts.astype(np.float64).T)).astype(
        np.float32
    )
    label_arr = np.asarray(labels, dtype=np.int32)
    c = len(manifest.class_names)

    manifest.preprocess = backend.preprocess
    manifest.skipped = skipped
    write_container(
        manifest.features_path, "features", features, c, label_arr, manifest.class_names
    )
    write_container(
        manifest.logits_path, "logits", logits, c, label_arr, manifest.class_names
    )
    manifest.save(manifest.manifest_path)
    return ExportResult(manifest=manifest, n_exported=len(images), n_skipped=len(skipped))


def build_manifest(
    data_dir: str | Path,
    out_prefix: str | Path,
    model: str,
    template: str,
    logit_scale: float,
) -> ExportManifest:
    """Scan the dataset and lay out output paths under ``out_prefix``."""
    index = scan_dataset(data_dir)
    prefix = Path(out_prefix)
    return ExportManifest(
        dataset_path=str(Path(data_dir)),
        class_names=index.class_names,
        template=template,
        model=model,
        logit_scale=logit_scale,
        features_path=str(prefix.with_name(prefix.name + ".features.cple")),
        logits_path=str(prefix.with_name(prefix.name + ".logits.cple")),
        manifest_path=str(prefix.with_name(prefix.name + ".manifest.json")),
    )
