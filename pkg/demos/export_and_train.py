"""
From image folder to trained head
=================================

End-to-end bridge between the two packages: render a tiny 3-class color
image dataset, export embeddings and zero-shot logits with the
self-contained toy encoder, then run the curriculum engine on the
exported containers as if the images were unlabeled.
"""
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image

from vlm_exporter import DEFAULT_TEMPLATE, build_manifest, export

from cpl import (
    LossKind,
    OptimConfig,
    ParadigmSpec,
    RunConfig,
    SelectionParams,
    load_container,
    run_cpl,
    softmax_rows,
    top1_accuracy,
)

workdir = Path(tempfile.mkdtemp(prefix="cpl-demo-"))

# Three classes of noisy solid-color 32x32 PNGs, one directory per class.
rng = np.random.default_rng(42)
colors = {"blue": (40, 60, 220), "green": (50, 200, 60), "red": (220, 50, 40)}
for name, color in colors.items():
    d = workdir / "images" / name
    d.mkdir(parents=True)
    for i in range(10):
        pix = np.array(color) + rng.normal(scale=28.0, size=(32, 32, 3))
        if i % 3 == 0:
            pix[::6] *= 0.55  # occasional darker stripes, just for variety
        Image.fromarray(np.clip(pix, 0, 255).astype(np.uint8)).save(d / f"img_{i:02d}.png")
print(f"rendered 30 images under {workdir / 'images'}")

# Export: the toy backend embeds images and the class words into one
# space, so the logits file holds genuine zero-shot scores.
manifest = build_manifest(
    workdir / "images", workdir / "toy", "toy", DEFAULT_TEMPLATE, logit_scale=10.0
)
export(manifest)
print(f"wrote {manifest.features_path}")
print(f"wrote {manifest.logits_path}")

features = load_container(manifest.features_path)
logits = load_container(manifest.logits_path)
zero_shot = top1_accuracy(softmax_rows(logits.rows), features.labels)
print(f"\nclasses: {features.class_names}")
print(f"zero-shot top-1 from the exported logits: {zero_shot:.3f}")

# Train the linear head on the exported features, treating every image
# as unlabeled; the directory labels are used only to score the result.
config = RunConfig(
    paradigm=ParadigmSpec("ul"),
    selection=SelectionParams(alpha=0.6, beta=0.9),
    loss=LossKind("cc"),
    optim=OptimConfig(epochs=60, lr=0.1),
    big_t=2,
    seed=0,
)
report = run_cpl(config, features, features, logits=logits)
for r in report.records:
    print(
        f"iteration {r.t}: selected {r.m} of {features.n},"
        f" candidate frequency {r.class_frequency}, top-1 {r.test_top1:.3f}"
    )
print(f"final top-1 on the pool: {report.final['test_top1']:.3f}")
