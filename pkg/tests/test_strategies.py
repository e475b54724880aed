"""Strategy registry and mask construction tests."""

import dataclasses

import pytest

from phimask import grid as g
from phimask import strategies as st
from phimask.documents import Element, PhiCategory, generate_document


@pytest.fixture(scope="module")
def doc():
    return generate_document(1, "billing-v1")


class TestPresets:
    def test_hook_sets(self):
        assert st.preset("V3").hook_points == (st.HookPoint.SAM_BLOCK_11,)
        assert st.preset("V4").hook_points == (st.HookPoint.SAM_BLOCK_6,
                                               st.HookPoint.SAM_BLOCK_9,
                                               st.HookPoint.SAM_BLOCK_11)
        assert st.preset("V5").hook_points == (st.HookPoint.SAM_BLOCK_11,)
        assert st.preset("V6").hook_points == (st.HookPoint.COMPRESSION_NET2,)
        assert st.preset("V7").hook_points == (st.HookPoint.SAM_BLOCK_11,
                                               st.HookPoint.COMPRESSION_NET2)
        assert st.preset("V8").hook_points == (st.HookPoint.SAM_BLOCK_11,
                                               st.HookPoint.VISION_ENCODER)
        assert st.preset("V9").hook_points == (st.HookPoint.PROJECTOR,)

    def test_fourteen_benchmark_rows(self):
        rows = st.table_rows()
        assert len(rows) == 14
        assert len({r.label() for r in rows}) == 14

    def test_radius_floor(self):
        with pytest.raises(ValueError):
            st.StrategyConfig("x", ((st.HookPoint.SAM_BLOCK_11, 0),))

    def test_v5_radius_range(self):
        radii = set(st.V5_RADII.values())
        assert min(radii) == 1 and max(radii) == 8
        with pytest.raises(ValueError):
            st.StrategyConfig("x", ((st.HookPoint.SAM_BLOCK_11, 1),),
                              per_category_radii={c: 9 for c in PhiCategory})

    def test_unknown_preset(self):
        with pytest.raises(st.UnknownPresetError):
            st.preset("V99")

    def test_strategy_file_round_trip(self, tmp_path):
        import json
        cfg = st.preset("V7", 1, 3)
        path = tmp_path / "s.json"
        path.write_text(json.dumps(st.dump_strategy(cfg)))
        assert st.load_strategy_file(path) == cfg


class TestBuildMasks:
    def test_v3_reference_coverage(self, doc):
        build = st.build_masks(doc, st.preset("V3", 1))
        stats = build.stats[st.HookPoint.SAM_BLOCK_11]
        assert stats.patch_count == 539
        assert round(stats.coverage_tiles, 4) == 0.3369

    def test_v7_two_masks(self, doc):
        build = st.build_masks(doc, st.preset("V7", 1, 2))
        assert set(build.masks) == {st.HookPoint.SAM_BLOCK_11,
                                    st.HookPoint.COMPRESSION_NET2}
        assert build.masks[st.HookPoint.COMPRESSION_NET2].grid is g.COMP20

    def test_v4_blocks_share_geometry(self, doc):
        build = st.build_masks(doc, st.preset("V4", 1))
        m6 = build.masks[st.HookPoint.SAM_BLOCK_6].patches
        m9 = build.masks[st.HookPoint.SAM_BLOCK_9].patches
        m11 = build.masks[st.HookPoint.SAM_BLOCK_11].patches
        assert m6 == m9 == m11

    def test_coverage_nondecreasing_in_radius(self, doc):
        for name in ("V3", "V6", "V9"):
            covs = []
            for r in (1, 2, 3):
                build = st.build_masks(doc, st.preset(name, r))
                hook = next(iter(build.masks))
                covs.append(build.stats[hook].coverage_tiles)
            assert covs[0] < covs[1] < covs[2]

    def test_v5_uniform_equals_v3(self, doc):
        for k in (1, 2, 3, 5, 8):
            v5 = st.StrategyConfig(
                "V5", ((st.HookPoint.SAM_BLOCK_11, 1),),
                per_category_radii={c: k for c in PhiCategory})
            v3 = st.preset("V3", k)
            b5 = st.build_masks(doc, v5)
            b3 = st.build_masks(doc, v3)
            assert b5.masks[st.HookPoint.SAM_BLOCK_11].patches == \
                b3.masks[st.HookPoint.SAM_BLOCK_11].patches

    def test_masks_ignore_element_text(self, doc):
        scrambled = dataclasses.replace(
            doc, elements=tuple(
                Element("x" * len(e.text), e.bbox) for e in doc.elements))
        a = st.build_masks(doc, st.preset("V3", 2))
        b = st.build_masks(scrambled, st.preset("V3", 2))
        assert a.masks[st.HookPoint.SAM_BLOCK_11].patches == \
            b.masks[st.HookPoint.SAM_BLOCK_11].patches

    def test_projector_mask_from_taint(self, doc):
        build = st.build_masks(doc, st.preset("V9", 3))
        sam = build.source_masks[st.HookPoint.PROJECTOR]
        prop = g.propagate_compression(sam)
        assert {(p.tile_row, p.tile_col, p.row, p.col)
                for p in build.masks[st.HookPoint.PROJECTOR].patches} == \
            {(p.tile_row, p.tile_col, p.row, p.col)
             for p in prop.tainted5.patches}

    def test_multitile_build(self):
        doc2 = generate_document(4, "billing-v2")
        build = st.build_masks(doc2, st.preset("V3", 1))
        mask = build.masks[st.HookPoint.SAM_BLOCK_11]
        assert len(mask.tiles()) == 2
        stats = build.stats[st.HookPoint.SAM_BLOCK_11]
        assert stats.tiles_in_use == 2
        assert stats.coverage_page < stats.coverage_tiles

    def test_token_specs(self, doc):
        build = st.build_masks(doc, st.preset("V8", 1, 1))
        dims = {s.hook_point: s.dims for s in build.token_specs}
        assert dims[st.HookPoint.SAM_BLOCK_11] == 768
        assert all(s.sigma == 0.02 for s in build.token_specs)


class TestExport:
    def test_round_trip(self, doc, tmp_path):
        build = st.build_masks(doc, st.preset("V8", 1, 1))
        path = tmp_path / "masks.jsonl"
        n = st.export_masks(build, doc.id, path)
        recs = g.read_interchange(path)
        assert len(recs) == n
        hooks = {r["hook_point"] for r in recs}
        assert hooks == {"sam_block_11", "vision_encoder"}
        back = g.masks_from_records(recs)
        for hook, mask in build.masks.items():
            assert back[(doc.id, hook.value)].patches == mask.patches

    def test_empty_masks(self, doc, tmp_path):
        build = st.build_masks(doc, st.preset("baseline"))
        path = tmp_path / "masks.jsonl"
        assert st.export_masks(build, doc.id, path) == 0
        assert path.read_text() == ""
