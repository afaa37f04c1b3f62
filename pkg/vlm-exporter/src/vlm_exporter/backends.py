"""Encoder backends: image and class-text embeddings in a shared space.

The ``toy`` backend is fully self-contained and deterministic.  It embeds
images through a hand-built color/texture descriptor and embeds class texts
by rendering a canonical swatch for the color/pattern words it knows, then
pushing that swatch through the same descriptor.  Zero-shot classification
on color-named classes is therefore genuine: nothing about the dataset's
labels enters the embeddings.

The ``ViT-B/32`` backend wraps a locally cached CLIP checkpoint and is
optional; constructing it without the weights raises a clear error.
"""
from __future__ import annotations

import hashlib

import numpy as np

DESCRIPTOR_DIM = 34
EMBED_DIM = 64
PROJECTION_SEED = 20240612
INPUT_SIZE = 32

COLOR_WORDS = {
    "red": (1.0, 0.0, 0.0),
    "green": (0.0, 1.0, 0.0),
    "blue": (0.0, 0.0, 1.0),
    "yellow": (1.0, 1.0, 0.0),
    "cyan": (0.0, 1.0, 1.0),
    "magenta": (1.0, 0.0, 1.0),
    "orange": (1.0, 0.5, 0.0),
    "purple": (0.5, 0.0, 0.5),
    "white": (1.0, 1.0, 1.0),
    "black": (0.0, 0.0, 0.0),
    "gray": (0.5, 0.5, 0.5),
    "grey": (0.5, 0.5, 0.5),
}
PATTERN_WORDS = ("striped", "dotted", "checkered")


class BackendUnavailableError(RuntimeError):
    """The requested model cannot run in this environment."""


def _unit_rows(mat: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    out = np.where(norms > 1e-12, mat / np.maximum(norms, 1e-12), 0.0)
    for i in np.flatnonzero(norms.ravel() <= 1e-12):
        out[i, 0] = 1.0
    return out


def _descriptor(image: np.ndarray) -> np.ndarray:
    """34-dim color/texture summary of a float RGB image in [0, 1]."""
    if image.shape != (INPUT_SIZE, INPUT_SIZE, 3):
        raise ValueError(f"expected {INPUT_SIZE}x{INPUT_SIZE} RGB input")
    mean_rgb = image.mean(axis=(0, 1))
    bins = np.clip((image * 3).astype(np.int64), 0, 2)
    cells = bins[..., 0] * 9 + bins[..., 1] * 3 + bins[..., 2]
    hist = np.bincount(cells.ravel(), minlength=27) / cells.size
    gray = image.mean(axis=2)
    grad_x = np.abs(np.diff(gray, axis=1)).mean()
    grad_y = np.abs(np.diff(gray, axis=0)).mean()
    saturation = (image.max(axis=2) - image.min(axis=2)).mean()
    value = image.max(axis=2).mean()
    return np.concatenate(
        [mean_rgb, hist, [grad_x, grad_y, saturation, value]]
    ).astype(np.float64)


def _render_swatch(color: tuple[float, float, float], pattern: str | None) -> np.ndarray:
    base = np.broadcast_to(np.asarray(color), (INPUT_SIZE, INPUT_SIZE, 3)).copy()
    dark = np.asarray(color) * 0.25
    if pattern == "striped":
        for row in range(0, INPUT_SIZE, 8):
            base[row : row + 4, :] = dark
    elif pattern == "dotted":
        for row in range(2, INPUT_SIZE, 8):
            for col in range(2, INPUT_SIZE, 8):
                base[row : row + 3, col : col + 3] = dark
    elif pattern == "checkered":
        for row in range(0, INPUT_SIZE, 8):
            for col in range(0, INPUT_SIZE, 8):
                if (row // 8 + col // 8) % 2 == 0:
                    base[row : row + 8, col : col + 8] = dark
    return base


class ToyBackend:
    """Deterministic color/texture encoder with a shared image/text space."""

    name = "toy"
    dim = EMBED_DIM
    input_size = INPUT_SIZE
    preprocess = f"RGB bilinear resize {INPUT_SIZE}x{INPUT_SIZE}, scale to [0,1]"

    def __init__(self) -> None:
        rng = np.random.default_rng(PROJECTION_SEED)
        self._projection = rng.normal(size=(DESCRIPTOR_DIM, EMBED_DIM)) / np.sqrt(
            DESCRIPTOR_DIM
        )

    def _embed(self, image: np.ndarray) -> np.ndarray:
        return _descriptor(image) @ self._projection

    def encode_images(self, images: np.ndarray) -> np.ndarray:
        if images.ndim != 4:
            raise ValueError("expected a batch of RGB images")
        flat = np.stack([self._embed(img) for img in images])
        return _unit_rows(flat).astype(np.float32)

    def encode_texts(self, class_names: list[str], template: str) -> np.ndarray:
        rows = []
        for name in class_names:
            tokens = name.lower().replace("-", " ").replace("_", " ").split()
            color = next((COLOR_WORDS[t] for t in tokens if t in COLOR_WORDS), None)
            pattern = next((t for t in tokens if t in PATTERN_WORDS), None)
            if color is not None:
                rows.append(self._embed(_render_swatch(color, pattern)))
            else:
                # unknown vocabulary: a stable pseudo-embedding, so scoring
                # stays defined but carries no real signal
                prompt = template.replace("[CLASS]", name)
                digest = hashlib.sha256(prompt.encode("utf-8")).digest()
                seed = int.from_bytes(digest[:8], "little")
                rows.append(np.random.default_rng(seed).normal(size=EMBED_DIM))
        return _unit_rows(np.stack(rows)).astype(np.float32)


class ClipBackend:
    """CLIP via a locally cached checkpoint; optional heavy dependency."""

    input_size = 224
    preprocess = "CLIP processor defaults (resize, center crop, normalize)"

    _HF_NAMES = {"ViT-B/32": "openai/clip-vit-base-patch32"}

    def __init__(self, model: str) -> None:
        self.name = model
        hf_name = self._HF_NAMES.get(model, model)
        try:
            import torch
            from transformers import CLIPModel, CLIPProcessor

            self._torch = torch
            self._model = CLIPModel.from_pretrained(hf_name, local_files_only=True)
            self._model.eval()
            self._processor = CLIPProcessor.from_pretrained(hf_name, local_files_only=True)
        except Exception as e:
            raise BackendUnavailableError(
                f"model {model!r} needs torch/transformers and a locally cached "
                f"checkpoint ({hf_name}); install the 'clip' extra and pre-download "
                f"the weights, or use --model toy ({e})"
            ) from e
        self.dim = int(self._model.config.projection_dim)

    def encode_images(self, images: np.ndarray) -> np.ndarray:
        torch = self._torch
        with torch.no_grad():
            pixel = self._processor(
                images=[(img * 255).astype(np.uint8) for img in images],
                return_tensors="pt",
            )["pixel_values"]
            feats = self._model.get_image_features(pixel_values=pixel).numpy()
        return _unit_rows(feats.astype(np.float64)).astype(np.float32)

    def encode_texts(self, class_names: list[str], template: str) -> np.ndarray:
        torch = self._torch
        prompts = [template.replace("[CLASS]", n) for n in class_names]
        with torch.no_grad():
            tokens = self._processor(text=prompts, return_tensors="pt", padding=True)
            feats = self._model.get_text_features(**tokens).numpy()
        return _unit_rows(feats.astype(np.float64)).astype(np.float32)


def resolve_backend(model: str):
    if model == "toy":
        return ToyBackend()
    return ClipBackend(model)
