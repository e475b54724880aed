"""Adapter manifest: where each hook point lives inside the model and
what the replacement token looks like there."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class HookBinding:
    module_path: str
    rows: int
    cols: int
    dims: int
    sigma: float = 0.02
    trainable: bool = True

    def __post_init__(self) -> None:
        if self.rows <= 0 or self.cols <= 0 or self.dims <= 0:
            raise ManifestError("rows, cols and dims must be positive")
        if self.sigma <= 0:
            raise ManifestError("sigma must be positive")


@dataclass(frozen=True)
class AdapterManifest:
    model: str                      # factory import string "module:attr"
    hooks: dict[str, HookBinding]
    tile_cols: int = 1              # batch index = tile_row*tile_cols+tile_col

    def binding(self, hook_point: str) -> HookBinding:
        try:
            return self.hooks[hook_point]
        except KeyError:
            raise ManifestError(
                f"no module path bound for hook point {hook_point!r}") from None


def load_manifest(path: str | Path) -> AdapterManifest:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    hooks = {}
    for hook_point, spec in raw["hooks"].items():
        hooks[hook_point] = HookBinding(
            module_path=spec["module_path"],
            rows=int(spec["rows"]), cols=int(spec["cols"]),
            dims=int(spec["dims"]),
            sigma=float(spec.get("sigma", 0.02)),
            trainable=bool(spec.get("trainable", True)),
        )
    return AdapterManifest(model=raw["model"], hooks=hooks,
                           tile_cols=int(raw.get("tile_cols", 1)))


def dump_manifest(manifest: AdapterManifest) -> dict:
    return {
        "model": manifest.model,
        "tile_cols": manifest.tile_cols,
        "hooks": {hp: {
            "module_path": b.module_path,
            "rows": b.rows, "cols": b.cols, "dims": b.dims,
            "sigma": b.sigma, "trainable": b.trainable,
        } for hp, b in sorted(manifest.hooks.items())},
    }
