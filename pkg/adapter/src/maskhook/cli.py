"""Command line entry: run one image through a hooked model."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import torch

from .interchange import InterchangeError, read_records
from .manifest import ManifestError, load_manifest
from .runner import AdapterError, apply_and_run, load_model


def main(argv: list[str] | None = None) -> int:
    p = argparse.ArgumentParser(
        prog="maskhook",
        description="apply a mask interchange file at model hook points")
    p.add_argument("--image", type=Path, required=True,
                   help="image tensor saved with torch.save")
    p.add_argument("--masks", type=Path, required=True)
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--doc-id", default=None,
                   help="restrict to one document's records")
    p.add_argument("--out", type=Path, required=True,
                   help="output text file; diagnostics written alongside")
    args = p.parse_args(argv)

    try:
        manifest = load_manifest(args.manifest)
        records = read_records(args.masks)
        if args.doc_id is not None:
            records = [r for r in records if r["doc_id"] == args.doc_id]
        model = load_model(manifest)
        image = torch.load(args.image, weights_only=True)
        text, diagnostics = apply_and_run(model, image, records, manifest)
    except (AdapterError, ManifestError, InterchangeError,
            FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    args.out.write_text(text, encoding="utf-8")
    diag_path = args.out.with_suffix(".diagnostics.json")
    with open(diag_path, "w", encoding="utf-8") as fh:
        json.dump([{"hook_point": d.hook_point,
                    "replaced_count": d.replaced_count}
                   for d in diagnostics], fh, sort_keys=True, indent=1)
        fh.write("\n")
    print(f"wrote {args.out} and {diag_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
