"""Export manifest: the record of what was encoded, how, and where it went."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

CLASS_PLACEHOLDER = "[CLASS]"
DEFAULT_TEMPLATE = "a photo of a [CLASS]"


@dataclass
class ExportManifest:
    """Everything needed to reproduce (and audit) one export run."""

    dataset_path: str
    class_names: list[str]
    template: str = DEFAULT_TEMPLATE
    model: str = "ViT-B/32"
    logit_scale: float = 100.0
    features_path: str = ""
    logits_path: str = ""
    manifest_path: str = ""
    preprocess: str = ""
    skipped: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.class_names:
            raise ValueError("class_names must be non-empty")
        if any(not n for n in self.class_names):
            raise ValueError("class names must be non-empty strings")
        if CLASS_PLACEHOLDER not in self.template:
            raise ValueError(f"template must contain {CLASS_PLACEHOLDER!r}")
        if self.logit_scale <= 0:
            raise ValueError("logit_scale must be positive")

    def prompt_for(self, class_name: str) -> str:
        return self.template.replace(CLASS_PLACEHOLDER, class_name)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path: str | Path) -> "ExportManifest":
        return cls(**json.loads(Path(path).read_text()))
