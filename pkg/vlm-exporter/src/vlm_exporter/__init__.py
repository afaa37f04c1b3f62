"""Export frozen VLM embeddings and zero-shot logits into CPLE containers."""
from .backends import BackendUnavailableError, ClipBackend, ToyBackend, resolve_backend
from .cple import read_container, write_container
from .dataset import DatasetIndex, scan_dataset
from .export import ExportResult, build_manifest, export
from .manifest import CLASS_PLACEHOLDER, DEFAULT_TEMPLATE, ExportManifest

__version__ = "0.1.0"

__all__ = [
    "BackendUnavailableError",
    "CLASS_PLACEHOLDER",
    "ClipBackend",
    "DEFAULT_TEMPLATE",
    "DatasetIndex",
    "ExportManifest",
    "ExportResult",
    "ToyBackend",
    "build_manifest",
    "export",
    "read_container",
    "resolve_backend",
    "scan_dataset",
    "write_container",
]
