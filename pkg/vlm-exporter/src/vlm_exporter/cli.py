"""Command line: ``vlm-export export --data DIR --out PREFIX ...``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .backends import BackendUnavailableError
from .export import build_manifest, export
from .manifest import DEFAULT_TEMPLATE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vlm-export",
        description="Export VLM embeddings and zero-shot logits as CPLE containers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    ex = sub.add_parser("export", help="encode a class-directory image dataset")
    ex.add_argument("--data", required=True, help="dataset root (one directory per class)")
    ex.add_argument("--out", required=True, help="output path prefix")
    ex.add_argument("--model", default="ViT-B/32", help="encoder identifier, or 'toy'")
    ex.add_argument("--template", default=DEFAULT_TEMPLATE, help="prompt with [CLASS] placeholder")
    ex.add_argument("--logit-scale", type=float, default=100.0)
    ex.set_defaults(func=cmd_export)
    return parser


def cmd_export(args) -> int:
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    manifest = build_manifest(
        args.data, args.out, args.model, args.template, args.logit_scale
    )
    result = export(manifest)
    for path in (manifest.features_path, manifest.logits_path, manifest.manifest_path):
        print(f"wrote {path}")
    print(f"exported {result.n_exported} images ({result.n_skipped} skipped)")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (BackendUnavailableError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
