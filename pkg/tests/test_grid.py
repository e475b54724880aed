"""Geometry unit tests, anchored on an independent per-pixel oracle."""

import numpy as np
import pytest

from phimask import grid as g


def pixel_oracle_cells(rect, grid):
    """Brute force: enumerate every pixel, assign it to its cell."""
    x, y, w, h = rect
    xs = np.arange(x, x + w)
    ys = np.arange(y, y + h)
    num, den = grid.pitch.numerator, grid.pitch.denominator
    cols = np.unique((xs * den) // num)
    rows = np.unique((ys * den) // num)
    cols = cols[cols < grid.cols]
    rows = rows[rows < grid.rows]
    return {(int(r), int(c)) for r in rows for c in cols}


class TestTileRect:
    def test_inside_single_tile(self):
        out = g.tile_rect((10, 20, 100, 50), (2550, 3300), 1024)
        assert out == [((0, 0), (10, 20, 100, 50))]

    def test_split_at_tile_boundary(self):
        out = g.tile_rect((1000, 10, 48, 20), (2048, 1024), 1024)
        assert ((0, 0), (1000, 10, 24, 20)) in out
        assert ((0, 1), (0, 10, 24, 20)) in out
        assert len(out) == 2
        # per-pixel membership: every pixel lands in exactly one piece
        covered = set()
        for (tr, tc), (lx, ly, lw, lh) in out:
            for px in range(lx, lx + lw):
                for py in range(ly, ly + lh):
                    p = (tc * 1024 + px, tr * 1024 + py)
                    assert p not in covered
                    covered.add(p)
        assert covered == {(px, py) for px in range(1000, 1048)
                           for py in range(10, 30)}

    def test_zero_area_rejected(self):
        with pytest.raises(g.GeometryError):
            g.tile_rect((10, 10, 0, 5), (1024, 1024), 1024)

    def test_outside_page_rejected(self):
        with pytest.raises(g.GeometryError):
            g.tile_rect((1000, 10, 48, 20), (1024, 1024), 1024)

    def test_partition_property(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            x = int(rng.integers(0, 2400))
            y = int(rng.integers(0, 3100))
            w = int(rng.integers(1, 2550 - x + 1))
            h = int(rng.integers(1, 3300 - y + 1))
            pieces = g.tile_rect((x, y, w, h), (2550, 3300), 1024)
            area = sum(lw * lh for _, (_, _, lw, lh) in pieces)
            assert area == w * h
            # mapped-back pieces are pairwise disjoint rectangles
            boxes = []
            for (tr, tc), (lx, ly, lw, lh) in pieces:
                boxes.append((tc * 1024 + lx, tr * 1024 + ly, lw, lh))
            for i in range(len(boxes)):
                for j in range(i + 1, len(boxes)):
                    ax, ay, aw, ah = boxes[i]
                    bx, by, bw, bh = boxes[j]
                    assert not (ax < bx + bw and bx < ax + aw and
                                ay < by + bh and by < ay + ah)


class TestRectToPatches:
    def test_single_pixel(self):
        assert g.rect_to_patches((0, 0, 1, 1), g.SAM40) == {(0, 0)}

    def test_known_block(self):
        cells = g.rect_to_patches((256, 512, 100, 20), g.SAM40)
        assert cells == pixel_oracle_cells((256, 512, 100, 20), g.SAM40)
        assert {r for r, _ in cells} == {20}
        assert {c for _, c in cells} == {10, 11, 12, 13}

    def test_clipped_right_edge(self):
        cells = g.rect_to_patches((210, 0, 20, 14), g.VIT16)
        assert {c for _, c in cells} == {15}
        assert {r for r, _ in cells} == {0}

    def test_oracle_agreement_sampled(self):
        rng = np.random.default_rng(11)
        for grid in (g.SAM40, g.VIT16, g.COMP20):
            for _ in range(300):
                x = int(rng.integers(0, grid.tile_size - 1))
                y = int(rng.integers(0, grid.tile_size - 1))
                w = int(rng.integers(1, min(grid.tile_size - x, 200) + 1))
                h = int(rng.integers(1, min(grid.tile_size - y, 200) + 1))
                assert g.rect_to_patches((x, y, w, h), grid) == \
                    pixel_oracle_cells((x, y, w, h), grid)

    def test_empty_rejected(self):
        with pytest.raises(g.GeometryError):
            g.rect_to_patches((5, 5, 0, 1), g.SAM40)


class TestDilate:
    def test_interior_ball(self):
        assert len(g.dilate({(20, 10)}, 1, g.SAM40)) == 9

    def test_corner_clip(self):
        assert g.dilate({(0, 0)}, 1, g.SAM40) == {(0, 0), (0, 1), (1, 0), (1, 1)}

    def test_radius_zero_identity(self):
        cells = {(3, 4), (10, 20)}
        assert g.dilate(cells, 0, g.SAM40) == cells

    def test_extensive_and_monotone(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            cells = {(int(rng.integers(0, 40)), int(rng.integers(0, 40)))
                     for _ in range(rng.integers(1, 8))}
            prev = set(cells)
            for r in range(0, 9):
                cur = g.dilate(cells, r, g.SAM40)
                assert cur >= cells
                assert cur >= prev
                prev = cur

    def test_compose_equals_double_radius_interior(self):
        cells = {(20, 20)}
        assert g.dilate(g.dilate(cells, 1, g.SAM40), 1, g.SAM40) == \
            g.dilate(cells, 2, g.SAM40)


def _mask(cells, grid=g.SAM40, tile=(0, 0)):
    return g.MaskSet(grid, frozenset(
        g.Patch(tile[0], tile[1], r, c) for r, c in cells))


class TestPropagation:
    def test_full_mask(self):
        full = {(r, c) for r in range(40) for c in range(40)}
        res = g.propagate_compression(_mask(full))
        assert len(res.masked20) == 400
        assert res.tainted20.patches == res.masked20.patches
        assert len(res.masked5) == 25
        assert len(res.tainted5) == 25

    def test_single_cell_taints_only_origin(self):
        res = g.propagate_compression(_mask({(0, 0)}))
        assert len(res.masked20) == 0
        assert {(p.row, p.col) for p in res.tainted20.patches} == {(0, 0)}

    def test_aligned_block_masks_one_taints_neighbors(self):
        res = g.propagate_compression(_mask({(0, 0), (0, 1), (1, 0), (1, 1)}))
        assert {(p.row, p.col) for p in res.masked20.patches} == {(0, 0)}
        assert {(p.row, p.col) for p in res.tainted20.patches} == \
            {(0, 0), (0, 1), (1, 0), (1, 1)}

    def test_masked_subset_tainted(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            cells = {(int(rng.integers(0, 40)), int(rng.integers(0, 40)))
                     for _ in range(rng.integers(1, 120))}
            res = g.propagate_compression(_mask(cells))
            assert res.masked20.patches <= res.tainted20.patches
            assert res.masked5.patches <= res.tainted5.patches

    def test_taint_monotone_in_source(self):
        rng = np.random.default_rng(9)
        base = {(int(rng.integers(0, 40)), int(rng.integers(0, 40)))
                for _ in range(30)}
        extra = base | {(int(rng.integers(0, 40)), int(rng.integers(0, 40)))
                        for _ in range(30)}
        r1 = g.propagate_compression(_mask(base))
        r2 = g.propagate_compression(_mask(extra))
        assert r1.tainted20.patches <= r2.tainted20.patches
        assert r1.tainted5.patches <= r2.tainted5.patches

    def test_wrong_grid_rejected(self):
        with pytest.raises(g.GeometryError):
            g.propagate_compression(_mask({(0, 0)}, grid=g.COMP20))


class TestCoverage:
    def test_known_fractions(self):
        cells = {(r, c) for r in range(20) for c in range(20)}
        m = _mask(cells)
        assert g.coverage(m, 1) == 0.25

    def test_zero(self):
        assert g.coverage(_mask(set()), 1) == 0.0

    def test_paper_scale_count(self):
        cells = set()
        rows = iter(range(40))
        while len(cells) < 539:
            r = next(rows)
            for c in range(40):
                if len(cells) >= 539:
                    break
                cells.add((r, c))
        m = _mask(cells)
        assert round(g.coverage(m, 1), 4) == 0.3369


class TestInterchange:
    def test_round_trip(self, tmp_path):
        cells = {(1, 2), (3, 4), (0, 39)}
        m = g.MaskSet(g.SAM40, frozenset(
            g.Patch(0, 1, r, c) for r, c in cells), radius_used=2)
        recs = g.mask_records("doc-1", "sam_block_11", m)
        path = tmp_path / "masks.jsonl"
        g.write_interchange(path, recs)
        back = g.masks_from_records(g.read_interchange(path))
        assert back[("doc-1", "sam_block_11")].patches == m.patches
        assert back[("doc-1", "sam_block_11")].radius_used == 2

    def test_empty_file_valid(self, tmp_path):
        path = tmp_path / "masks.jsonl"
        g.write_interchange(path, [])
        assert g.read_interchange(path) == []
        assert g.masks_from_records([]) == {}
