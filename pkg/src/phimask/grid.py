"""Pixel-rect to patch-grid geometry.

Maps page-space rectangles through non-overlapping tiling onto encoder
patch grids, dilates patch sets, and models how a mask on the fine SAM
grid propagates through the two convolutional compression stages.

All cell arithmetic is exact: pitches are rationals and floor division
is done in integers, so a pixel is never attributed to two cells.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple


class GridSpec(NamedTuple):
    """One encoder grid: tile edge in pixels and its rows x cols layout."""

    name: str
    tile_size: int
    rows: int
    cols: int
    pitch: Fraction

    @property
    def cells_per_tile(self) -> int:
        return self.rows * self.cols


def _grid(name: str, tile: int, rows: int, cols: int, num: int, den: int) -> GridSpec:
    g = GridSpec(name, tile, rows, cols, Fraction(num, den))
    if g.pitch * g.cols != g.tile_size:
        raise ValueError(f"inconsistent grid {name}: pitch*cols != tile_size")
    return g


SAM40 = _grid("sam40", 1024, 40, 40, 256, 10)       # 25.6 px
VIT16 = _grid("vit16", 224, 16, 16, 14, 1)          # 14 px
COMP20 = _grid("comp20", 1024, 20, 20, 512, 10)     # 51.2 px
COMP5 = _grid("comp5", 1024, 5, 5, 2048, 10)        # 204.8 px
# projector tokens are the flattened comp5 cells of each tile (25/tile)
PROJECTOR = _grid("projector", 1024, 5, 5, 2048, 10)._replace(name="projector")

GRIDS = {g.name: g for g in (SAM40, VIT16, COMP20, COMP5, PROJECTOR)}


class Patch(NamedTuple):
    """A cell on one tile of a grid."""

    tile_row: int
    tile_col: int
    row: int
    col: int


@dataclass(frozen=True)
class MaskSet:
    """Patch indices selected for replacement on one grid."""

    grid: GridSpec
    patches: frozenset[Patch]
    radius_used: int = 0

    def __post_init__(self) -> None:
        for p in self.patches:
            if not (0 <= p.row < self.grid.rows and 0 <= p.col < self.grid.cols):
                raise ValueError(f"patch {p} outside grid {self.grid.name}")

    def __len__(self) -> int:
        return len(self.patches)

    def tiles(self) -> set[tuple[int, int]]:
        return {(p.tile_row, p.tile_col) for p in self.patches}


Rect = tuple[int, int, int, int]  # x, y, w, h in pixels


class GeometryError(ValueError):
    pass


def _cell(v: int, pitch: Fraction) -> int:
    return (v * pitch.denominator) // pitch.numerator


def tile_rect(bbox: Rect, page: tuple[int, int], tile_size: int
              ) -> list[tuple[tuple[int, int], Rect]]:
    """Split a page rect across the non-overlapping tiles it touches.

    Returns (tile_row, tile_col) with the clipped rect in tile-local
    pixels. The returned rects partition the input exactly.
    """
    x, y, w, h = bbox
    pw, ph = page
    if w <= 0 or h <= 0:
        raise GeometryError(f"empty bbox {bbox}")
    if x < 0 or y < 0 or x + w > pw or y + h > ph:
        raise GeometryError(f"bbox {bbox} outside page {page}")

    out = []
    tr0, tr1 = y // tile_size, (y + h - 1) // tile_size
    tc0, tc1 = x // tile_size, (x + w - 1) // tile_size
    for tr in range(tr0, tr1 + 1):
        for tc in range(tc0, tc1 + 1):
            x0 = max(x, tc * tile_size)
            x1 = min(x + w, (tc + 1) * tile_size)
            y0 = max(y, tr * tile_size)
            y1 = min(y + h, (tr + 1) * tile_size)
            out.append(((tr, tc), (x0 - tc * tile_size, y0 - tr * tile_size,
                                   x1 - x0, y1 - y0)))
    return out


def rect_to_patches(rect: Rect, grid: GridSpec) -> set[tuple[int, int]]:
    """Cells of one tile covered by a tile-local rect, inclusive of the
    cell containing the last pixel (x+w-1, y+h-1). Clipped at the grid
    border so an edge-touching rect claims the edge cell only.
    """
    x, y, w, h = rect
    if w <= 0 or h <= 0:
        raise GeometryError(f"empty rect {rect}")
    if x < 0 or y < 0:
        raise GeometryError(f"rect {rect} outside tile")
    c0 = _cell(x, grid.pitch)
    c1 = min(_cell(x + w - 1, grid.pitch), grid.cols - 1)
    r0 = _cell(y, grid.pitch)
    r1 = min(_cell(y + h - 1, grid.pitch), grid.rows - 1)
    return {(r, c) for r in range(r0, r1 + 1) for c in range(c0, c1 + 1)}


def dilate(cells: Iterable[tuple[int, int]], r: int, grid: GridSpec
           ) -> set[tuple[int, int]]:
    """Chebyshev ball of radius r around each cell, clipped to the grid."""
    if r < 0:
        raise GeometryError("negative radius")
    cells = set(cells)
    if r == 0:
        return cells
    out: set[tuple[int, int]] = set()
    for cr, cc in cells:
        for nr in range(max(cr - r, 0), min(cr + r, grid.rows - 1) + 1):
            for nc in range(max(cc - r, 0), min(cc + r, grid.cols - 1) + 1):
                out.add((nr, nc))
    return out


def rect_footprint(bbox: Rect, page: tuple[int, int], grid: GridSpec
                   ) -> set[Patch]:
    """Page rect -> patches across all tiles it touches."""
    out: set[Patch] = set()
    for (tr, tc), local in tile_rect(bbox, page, grid.tile_size):
        for (r, c) in rect_to_patches(local, grid):
            out.add(Patch(tr, tc, r, c))
    return out


def masked_footprint(bbox: Rect, page: tuple[int, int], grid: GridSpec,
                     radius: int) -> set[Patch]:
    """Dilated footprint of a page rect, dilation applied per tile."""
    by_tile: dict[tuple[int, int], set[tuple[int, int]]] = {}
    for (tr, tc), local in tile_rect(bbox, page, grid.tile_size):
        by_tile.setdefault((tr, tc), set()).update(rect_to_patches(local, grid))
    out: set[Patch] = set()
    for (tr, tc), cells in by_tile.items():
        for (r, c) in dilate(cells, radius, grid):
            out.add(Patch(tr, tc, r, c))
    return out


# --- compression propagation ------------------------------------------

# The 40->20 stage is modelled as a k3/s2/p1 convolution and the 20->5
# stage as k5/s4/p2, so receptive fields are centred on the strided
# anchor. Kernel sizes are a modelling default, overridable here.


@dataclass(frozen=True)
class CompressionModel:
    k1: int = 3   # 40 -> 20 kernel (stride 2)
    k2: int = 5   # 20 -> 5 kernel (stride 4)


@dataclass(frozen=True)
class CompressionResult:
    masked20: MaskSet
    tainted20: MaskSet
    masked5: MaskSet
    tainted5: MaskSet


def _stage(cells: set[tuple[int, int]], src: GridSpec, dst: GridSpec,
           stride: int, kernel: int) -> tuple[set, set]:
    """One downsample stage: (fully-masked cells, tainted cells)."""
    half = (kernel - 1) // 2
    masked, tainted = set(), set()
    for i in range(dst.rows):
        for j in range(dst.cols):
            pre = {(r, c)
                   for r in range(i * stride, min((i + 1) * stride, src.rows))
                   for c in range(j * stride, min((j + 1) * stride, src.cols))}
            if pre and pre <= cells:
                masked.add((i, j))
            rf = {(r, c)
                  for r in range(max(i * stride - half, 0),
                                 min(i * stride + half, src.rows - 1) + 1)
                  for c in range(max(j * stride - half, 0),
                                 min(j * stride + half, src.cols - 1) + 1)}
            if rf & cells:
                tainted.add((i, j))
    return masked, tainted


def propagate_compression(mask: MaskSet, model: CompressionModel = CompressionModel()
                          ) -> CompressionResult:
    """Push a sam40 mask through both compression stages, per tile.

    A compressed cell is masked only when its whole pre-image is masked,
    and tainted when any source cell inside its receptive field is. The
    tainted-minus-masked remainder is the residual leakage channel.
    """
    if mask.grid.name != "sam40":
        raise GeometryError(f"propagation needs a sam40 mask, got {mask.grid.name}")

    by_tile: dict[tuple[int, int], set[tuple[int, int]]] = {}
    for p in mask.patches:
        by_tile.setdefault((p.tile_row, p.tile_col), set()).add((p.row, p.col))

    m20: set[Patch] = set()
    t20: set[Patch] = set()
    m5: set[Patch] = set()
    t5: set[Patch] = set()
    for (tr, tc), cells in by_tile.items():
        sm20, st20 = _stage(cells, SAM40, COMP20, 2, model.k1)
        sm5, _ = _stage(sm20, COMP20, COMP5, 4, model.k2)
        _, st5 = _stage(st20, COMP20, COMP5, 4, model.k2)
        m20.update(Patch(tr, tc, r, c) for r, c in sm20)
        t20.update(Patch(tr, tc, r, c) for r, c in st20)
        m5.update(Patch(tr, tc, r, c) for r, c in sm5)
        t5.update(Patch(tr, tc, r, c) for r, c in st5)

    return CompressionResult(
        masked20=MaskSet(COMP20, frozenset(m20), mask.radius_used),
        tainted20=MaskSet(COMP20, frozenset(t20), mask.radius_used),
        masked5=MaskSet(COMP5, frozenset(m5), mask.radius_used),
        tainted5=MaskSet(COMP5, frozenset(t5), mask.radius_used),
    )


def coverage(mask: MaskSet, tiles_in_use: int) -> float:
    """Fraction of available patches the mask occupies."""
    if tiles_in_use < 1:
        raise GeometryError("tiles_in_use must be >= 1")
    return len(mask.patches) / (tiles_in_use * mask.grid.cells_per_tile)


# --- interchange file ---------------------------------------------------

# One record per replaced patch. This file is the contract consumed by
# the external hook adapter; field names are normative.

INTERCHANGE_FIELDS = ("doc_id", "hook_point", "grid_name", "tile_row",
                      "tile_col", "row", "col", "radius")


def mask_records(doc_id: str, hook_point: str, mask: MaskSet) -> list[dict]:
    recs = []
    for p in sorted(mask.patches):
        recs.append({
            "doc_id": doc_id,
            "hook_point": hook_point,
            "grid_name": mask.grid.name,
            "tile_row": p.tile_row,
            "tile_col": p.tile_col,
            "row": p.row,
            "col": p.col,
            "radius": mask.radius_used,
        })
    return recs


def write_interchange(path, records: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps({k: rec[k] for k in INTERCHANGE_FIELDS},
                                sort_keys=True) + "\n")


def read_interchange(path) -> list[dict]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out


def masks_from_records(records: Iterable[dict]) -> dict[tuple[str, str], MaskSet]:
    """Group interchange records back into (doc_id, hook_point) -> MaskSet."""
    grouped: dict[tuple[str, str], list[dict]] = {}
    for rec in records:
        grouped.setdefault((rec["doc_id"], rec["hook_point"]), []).append(rec)
    out = {}
    for key, recs in grouped.items():
        grid = GRIDS[recs[0]["grid_name"]]
        patches = frozenset(Patch(r["tile_row"], r["tile_col"], r["row"], r["col"])
                            for r in recs)
        out[key] = MaskSet(grid, patches, recs[0]["radius"])
    return out
