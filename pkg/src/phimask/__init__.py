"""Vision-token masking harness for PHI redaction in document OCR."""

from .backend import (BackendBehaviorConfig, OcrOutput, SurrogateBackend,
                      get_backend, run_ocr)
from .documents import (Document, PhiAnnotation, PhiCategory, PhiForm,
                        generate_document, load_corpus, write_corpus)
from .evaluation import (DocumentScore, StrategyReport, cascade_score,
                         detect_degradation, expected_cascade, score)
from .grid import (GRIDS, MaskSet, Patch, coverage, dilate,
                   propagate_compression, rect_to_patches, tile_rect)
from .redaction import DEFAULT_RULES, RedactionRule, redact
from .runner import run_hybrid, run_strategy, run_sweep
from .strategies import (HookPoint, MaskTokenSpec, StrategyConfig,
                         build_masks, export_masks, preset, table_rows)

__all__ = [
    "BackendBehaviorConfig", "OcrOutput", "SurrogateBackend", "get_backend",
    "run_ocr", "Document", "PhiAnnotation", "PhiCategory", "PhiForm",
    "generate_document", "load_corpus", "write_corpus", "DocumentScore",
    "StrategyReport", "cascade_score", "detect_degradation",
    "expected_cascade", "score", "GRIDS", "MaskSet", "Patch", "coverage",
    "dilate", "propagate_compression", "rect_to_patches", "tile_rect",
    "DEFAULT_RULES", "RedactionRule", "redact", "run_hybrid", "run_strategy",
    "run_sweep", "HookPoint", "MaskTokenSpec", "StrategyConfig",
    "build_masks", "export_masks", "preset", "table_rows",
]

__version__ = "0.1.0"
