import numpy as np
import pytest
from PIL import Image

CLASS_COLORS = {
    "blue": (40, 60, 220),
    "green": (50, 200, 60),
    "red": (220, 50, 40),
}


def write_toy_dataset(root, per_class=10, noise=28.0, corrupt=False, unlabeled=0, seed=42):
    """Noisy solid-color PNG dataset in class directories."""
    rng = np.random.default_rng(seed)

    def render(color, i):
        img = np.array(color, dtype=np.float64) + rng.normal(scale=noise, size=(32, 32, 3))
        if i % 3 == 0:
            img[::6, :, :] *= 0.55
        return np.clip(img, 0, 255).astype(np.uint8)

    for name, color in CLASS_COLORS.items():
        d = root / name
        d.mkdir(parents=True)
        for i in range(per_class):
            Image.fromarray(render(color, i)).save(d / f"img_{i:02d}.png")
    if corrupt:
        (root / "red" / "broken.png").write_bytes(b"this is not an image")
    if unlabeled:
        d = root / "_unlabeled"
        d.mkdir()
        colors = list(CLASS_COLORS.values())
        for i in range(unlabeled):
            Image.fromarray(render(colors[i % 3], i)).save(d / f"u_{i:02d}.png")
    return root


@pytest.fixture
def toy_dataset(tmp_path):
    return write_toy_dataset(tmp_path / "data")
