"""Class-directory dataset walker.

Layout convention: each immediate subdirectory of the root is one class,
named by the directory; class indices follow sorted directory order.  A
subdirectory named ``_unlabeled`` holds images without ground truth; they
are exported with the -1 sentinel and do not contribute a class.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

UNLABELED_DIR = "_unlabeled"
IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp", ".ppm")


@dataclass
class DatasetIndex:
    root: Path
    class_names: list[str]
    paths: list[Path]
    labels: list[int]

    @property
    def n(self) -> int:
        return len(self.paths)


def _image_files(directory: Path) -> list[Path]:
    return sorted(
        p for p in directory.iterdir()
        if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
    )


def scan_dataset(root: str | Path) -> DatasetIndex:
    root = Path(root)
    if not root.is_dir():
        raise ValueError(f"dataset root {root} is not a directory")
    class_dirs = sorted(
        p for p in root.iterdir() if p.is_dir() and p.name != UNLABELED_DIR
    )
    if not class_dirs:
        raise ValueError(f"no class directories under {root}")
    class_names = [p.name for p in class_dirs]
    paths: list[Path] = []
    labels: list[int] = []
    for label, directory in enumerate(class_dirs):
        for path in _image_files(directory):
            paths.append(path)
            labels.append(label)
    sentinel_dir = root / UNLABELED_DIR
    if sentinel_dir.is_dir():
        for path in _image_files(sentinel_dir):
            paths.append(path)
            labels.append(-1)
    if not paths:
        raise ValueError(f"no images found under {root}")
    return DatasetIndex(root=root, class_names=class_names, paths=paths, labels=labels)
