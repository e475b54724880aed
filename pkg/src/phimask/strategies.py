"""Masking strategies and per-document mask construction.

A strategy names the hook points it intercepts and a dilation radius
per hook (optionally per PHI category). Masks are built from annotation
boxes only; element text never influences geometry.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from pathlib import Path

from . import grid as g
from .documents import Document, PhiCategory

GLOBAL_VIEW = 224  # the auxiliary encoder sees the page resized to 224x224


class HookPoint(Enum):
    SAM_BLOCK_6 = "sam_block_6"
    SAM_BLOCK_9 = "sam_block_9"
    SAM_BLOCK_11 = "sam_block_11"
    COMPRESSION_NET2 = "compression_net2"
    VISION_ENCODER = "vision_encoder"
    PROJECTOR = "projector"

    @property
    def grid(self) -> g.GridSpec:
        return _HOOK_GRIDS[self]

    @property
    def on_sam_path(self) -> bool:
        """SAM trunk hooks, including the compression neck."""
        return self in (HookPoint.SAM_BLOCK_6, HookPoint.SAM_BLOCK_9,
                        HookPoint.SAM_BLOCK_11, HookPoint.COMPRESSION_NET2)


_HOOK_GRIDS = {
    HookPoint.SAM_BLOCK_6: g.SAM40,
    HookPoint.SAM_BLOCK_9: g.SAM40,
    HookPoint.SAM_BLOCK_11: g.SAM40,
    HookPoint.COMPRESSION_NET2: g.COMP20,
    HookPoint.VISION_ENCODER: g.VIT16,
    HookPoint.PROJECTOR: g.PROJECTOR,
}

# replacement-token spec per hook: embedding width and init sigma.
# Widths other than the SAM trunk are deployment configuration and are
# only serialized for the adapter.
DEFAULT_TOKEN_DIMS = {
    HookPoint.SAM_BLOCK_6: 768,
    HookPoint.SAM_BLOCK_9: 768,
    HookPoint.SAM_BLOCK_11: 768,
    HookPoint.COMPRESSION_NET2: 1024,
    HookPoint.VISION_ENCODER: 1024,
    HookPoint.PROJECTOR: 1280,
}


@dataclass(frozen=True)
class MaskTokenSpec:
    hook_point: HookPoint
    dims: int
    sigma: float = 0.02
    trainable: bool = True

    def __post_init__(self) -> None:
        if self.dims <= 0 or self.sigma <= 0:
            raise ValueError("token spec needs positive dims and sigma")


@dataclass(frozen=True)
class StrategyConfig:
    id: str
    hooks: tuple[tuple[HookPoint, int], ...]
    per_category_radii: dict[PhiCategory, int] | None = None

    def __post_init__(self) -> None:
        for hook, radius in self.hooks:
            if radius < 1:
                raise ValueError(f"{self.id}: radius for {hook} must be >= 1")
        if self.per_category_radii is not None:
            bad = {c: r for c, r in self.per_category_radii.items()
                   if not 1 <= r <= 8}
            if bad:
                raise ValueError(f"{self.id}: per-category radii out of 1..8: {bad}")
            missing = set(PhiCategory) - set(self.per_category_radii)
            if missing:
                raise ValueError(f"{self.id}: per-category radii missing {missing}")

    @property
    def hook_points(self) -> tuple[HookPoint, ...]:
        return tuple(h for h, _ in self.hooks)

    def radius_for(self, hook: HookPoint, category: PhiCategory) -> int:
        base = dict(self.hooks)[hook]
        if self.per_category_radii is not None:
            return self.per_category_radii[category]
        return base

    def label(self) -> str:
        if self.per_category_radii is not None:
            lo = min(self.per_category_radii.values())
            hi = max(self.per_category_radii.values())
            return f"{self.id} r={lo}-{hi}"
        radii = ",".join(str(r) for _, r in self.hooks)
        return f"{self.id} r={radii}"


class UnknownPresetError(KeyError):
    pass


# Type-tailored radii for the category-specific variant: long-form
# footprints are already wide so they keep small margins, compact
# structured footprints get the large ones. The exact table is a
# harness choice exposed as configuration.
V5_RADII = {
    PhiCategory.NAME: 1,
    PhiCategory.DATE_OF_BIRTH: 2,
    PhiCategory.ADDRESS: 3,
    PhiCategory.MRN: 8,
    PhiCategory.SSN: 8,
    PhiCategory.EMAIL: 7,
    PhiCategory.ACCOUNT: 6,
}


def preset(name: str, radius: int | None = None,
           radius2: int | None = None) -> StrategyConfig:
    """Build a strategy from its preset id and optional radii.

    radius applies to the first hook, radius2 to the second where one
    exists (the dual-hook variants).
    """
    name = name.upper()
    r = radius
    if name == "BASELINE":
        return StrategyConfig("baseline", ())
    if name == "V3":
        return StrategyConfig("V3", ((HookPoint.SAM_BLOCK_11, r or 1),))
    if name == "V4":
        rr = r or 1
        return StrategyConfig("V4", ((HookPoint.SAM_BLOCK_6, rr),
                                     (HookPoint.SAM_BLOCK_9, rr),
                                     (HookPoint.SAM_BLOCK_11, rr)))
    if name == "V5":
        return StrategyConfig("V5", ((HookPoint.SAM_BLOCK_11, 1),),
                              per_category_radii=dict(V5_RADII))
    if name == "V6":
        return StrategyConfig("V6", ((HookPoint.COMPRESSION_NET2, r or 1),))
    if name == "V7":
        return StrategyConfig("V7", ((HookPoint.SAM_BLOCK_11, r or 1),
                                     (HookPoint.COMPRESSION_NET2, radius2 or 2)))
    if name == "V8":
        return StrategyConfig("V8", ((HookPoint.SAM_BLOCK_11, r or 1),
                                     (HookPoint.VISION_ENCODER, radius2 or 1)))
    if name == "V9":
        return StrategyConfig("V9", ((HookPoint.PROJECTOR, r or 1),))
    raise UnknownPresetError(name)


def table_rows() -> list[StrategyConfig]:
    """The fourteen benchmark configurations, in report order."""
    return [
        preset("V3", 1), preset("V3", 2), preset("V3", 3),
        preset("V4", 1),
        preset("V5"),
        preset("V6", 1), preset("V6", 2), preset("V6", 3),
        preset("V7", 1, 2), preset("V7", 1, 3),
        preset("V8", 1, 1),
        preset("V9", 1), preset("V9", 2), preset("V9", 3),
    ]


def ablation_rows() -> list[StrategyConfig]:
    """Radius ablation grid: single-hook variants at r in 1..3."""
    return [preset(v, r) for v in ("V3", "V6", "V9") for r in (1, 2, 3)]


def load_strategy_file(path: str | Path) -> StrategyConfig:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    hooks = tuple((HookPoint(h["hook_point"]), int(h["radius"]))
                  for h in raw["hooks"])
    per_cat = None
    if raw.get("per_category_radii"):
        per_cat = {PhiCategory(k): int(v)
                   for k, v in raw["per_category_radii"].items()}
    return StrategyConfig(raw["id"], hooks, per_cat)


def dump_strategy(cfg: StrategyConfig) -> dict:
    out: dict = {
        "id": cfg.id,
        "hooks": [{"hook_point": h.value, "radius": r} for h, r in cfg.hooks],
    }
    if cfg.per_category_radii is not None:
        out["per_category_radii"] = {c.value: r
                                     for c, r in cfg.per_category_radii.items()}
    return out


# --- mask construction ----------------------------------------------------


def scale_to_global_view(bbox: g.Rect, page: tuple[int, int]) -> g.Rect:
    """Map a page rect into the resized 224x224 auxiliary-encoder view."""
    x, y, w, h = bbox
    pw, ph = page
    sx, sy = Fraction(GLOBAL_VIEW, pw), Fraction(GLOBAL_VIEW, ph)
    x0, y0 = int(x * sx), int(y * sy)
    x1, y1 = int((x + w - 1) * sx), int((y + h - 1) * sy)
    return (x0, y0, max(x1 - x0 + 1, 1), max(y1 - y0 + 1, 1))


def hook_footprint(bbox: g.Rect, page: tuple[int, int], hook: HookPoint,
                   radius: int = 0) -> set[g.Patch]:
    """Footprint of a page rect on a hook's grid, optionally dilated.

    The auxiliary encoder uses the resized global view; SAM-trunk grids
    tile the page. Projector footprints are taken on the source grid by
    callers, never here.
    """
    if hook is HookPoint.PROJECTOR:
        raise g.GeometryError("projector has no direct pixel footprint")
    if hook is HookPoint.VISION_ENCODER:
        local = scale_to_global_view(bbox, page)
        cells = g.rect_to_patches(local, g.VIT16)
        return {g.Patch(0, 0, r, c) for r, c in g.dilate(cells, radius, g.VIT16)}
    return g.masked_footprint(bbox, page, hook.grid, radius)


@dataclass(frozen=True)
class HookStats:
    patch_count: int
    tiles_in_use: int
    coverage_tiles: float
    coverage_page: float


@dataclass(frozen=True)
class MaskBuild:
    """Masks for one document under one strategy, plus build stats.

    source_masks carries the pre-propagation SAM-grid masks that the
    projector masks were derived from; the surrogate backend scores
    projector masking at that granularity.
    """

    strategy: StrategyConfig
    masks: dict[HookPoint, g.MaskSet]
    source_masks: dict[HookPoint, g.MaskSet]
    stats: dict[HookPoint, HookStats]
    token_specs: tuple[MaskTokenSpec, ...]


def _page_tiles(page: tuple[int, int], grid: g.GridSpec) -> int:
    pw, ph = page
    tw = -(-pw // grid.tile_size)
    th = -(-ph // grid.tile_size)
    return tw * th


def _sam_union(doc: Document, cfg: StrategyConfig, hook: HookPoint,
               grid: g.GridSpec) -> g.MaskSet:
    patches: set[g.Patch] = set()
    radii = []
    for ann in doc.annotations:
        r = cfg.radius_for(hook, ann.category)
        radii.append(r)
        patches |= g.masked_footprint(ann.bbox, doc.page, grid, r)
    return g.MaskSet(grid, frozenset(patches), max(radii) if radii else 0)


def build_masks(doc: Document, cfg: StrategyConfig) -> MaskBuild:
    """Tile, map, dilate and union each annotation box per hook point."""
    masks: dict[HookPoint, g.MaskSet] = {}
    source: dict[HookPoint, g.MaskSet] = {}

    for hook, base_radius in cfg.hooks:
        if hook is HookPoint.VISION_ENCODER:
            patches: set[g.Patch] = set()
            for ann in doc.annotations:
                r = cfg.radius_for(hook, ann.category)
                patches |= hook_footprint(ann.bbox, doc.page, hook, r)
            masks[hook] = g.MaskSet(g.VIT16, frozenset(patches), base_radius)
        elif hook is HookPoint.PROJECTOR:
            sam = _sam_union(doc, cfg, hook, g.SAM40)
            prop = g.propagate_compression(sam)
            tokens = frozenset(g.Patch(p.tile_row, p.tile_col, p.row, p.col)
                               for p in prop.tainted5.patches)
            masks[hook] = g.MaskSet(g.PROJECTOR, tokens, base_radius)
            source[hook] = sam
        else:
            masks[hook] = _sam_union(doc, cfg, hook, hook.grid)

    stats: dict[HookPoint, HookStats] = {}
    for hook, mask in masks.items():
        tiles = max(len(mask.tiles()), 1)
        stats[hook] = HookStats(
            patch_count=len(mask),
            tiles_in_use=tiles,
            coverage_tiles=g.coverage(mask, tiles),
            coverage_page=g.coverage(mask, _page_tiles(doc.page, mask.grid)),
        )

    specs = tuple(MaskTokenSpec(h, DEFAULT_TOKEN_DIMS[h]) for h in masks)
    return MaskBuild(cfg, masks, source, stats, specs)


def export_masks(build: MaskBuild, doc_id: str, path: str | Path) -> int:
    """Serialize one build to the interchange file. Returns record count."""
    records: list[dict] = []
    for hook in sorted(build.masks, key=lambda h: h.value):
        records.extend(g.mask_records(doc_id, hook.value, build.masks[hook]))
    g.write_interchange(path, records)
    return len(records)
