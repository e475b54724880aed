"""Behavioral surrogate for the OCR model.

The surrogate never looks at pixels. It decides, per text element, how
much of the element's patch footprint each intercepted hook point has
replaced, and emits text according to a small set of rules that mirror
the observed model behavior: heavily-masked wide values drop out,
compact labeled identifiers survive on context, and over-masking makes
the output degenerate instead of more private.

Suppression uses the minimum masked fraction across the hook points in
play: one intact pathway is enough for the text to survive. Projector
masks are scored at the SAM-grid source geometry they were derived
from, since 5x5 tokens cannot resolve sub-line layout.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field

from . import grid as g
from .documents import Document, Element, PhiAnnotation, PhiCategory, PhiForm
from .strategies import HookPoint, MaskBuild, hook_footprint


@dataclass(frozen=True)
class BackendBehaviorConfig:
    suppression_threshold: float = 0.5
    # (a) three or more simultaneous SAM-path interceptions break the
    # model; output balloons and masking stops being selective
    multi_hook_degradation_hooks: int = 3
    multi_hook_char_multiplier: float = 5.0
    # (b) saturating the projector token space at a wide radius makes
    # generation run away without changing what leaks
    projector_coverage_limit: float = 0.99
    projector_radius_limit: int = 3
    projector_char_multiplier: float = 20.0
    baseline_char_band: tuple[int, int] = (1995, 2078)

    def __post_init__(self) -> None:
        if not 0 < self.suppression_threshold <= 1:
            raise ValueError("suppression_threshold must be in (0, 1]")
        if self.multi_hook_char_multiplier <= 1 or self.projector_char_multiplier <= 1:
            raise ValueError("degradation multipliers must exceed 1")


EMISSION_EXACT = "exact"
EMISSION_REGENERATED = "regenerated"
EMISSION_SUPPRESSED = "suppressed"


@dataclass(frozen=True)
class EmissionRecord:
    category: PhiCategory
    emitted: str
    emitted_string: str | None


@dataclass(frozen=True)
class OcrOutput:
    text: str
    char_count: int
    emissions: tuple[EmissionRecord, ...]
    degraded: bool
    degradation_cause: str | None = None

    def __post_init__(self) -> None:
        if self.char_count != len(self.text):
            raise ValueError("char_count out of sync with text")

    def emission(self, category: PhiCategory) -> EmissionRecord:
        for e in self.emissions:
            if e.category is category:
                return e
        raise KeyError(category)


class BackendError(RuntimeError):
    pass


def _masked_fraction(element: Element, doc: Document, build: MaskBuild
                     ) -> float:
    """Minimum masked share of the element's footprint across hooks."""
    fractions = []
    for hook, mask in build.masks.items():
        if hook is HookPoint.PROJECTOR:
            mask = build.source_masks[hook]
            fp = hook_footprint(element.bbox, doc.page, HookPoint.SAM_BLOCK_11)
        else:
            fp = hook_footprint(element.bbox, doc.page, hook)
        if mask.grid.name != fp_grid_name(hook):
            raise BackendError(
                f"mask grid {mask.grid.name} does not match hook {hook.value}")
        if not fp:
            fractions.append(0.0)
            continue
        fractions.append(len(fp & mask.patches) / len(fp))
    if not fractions:
        return 0.0
    return min(fractions)


def fp_grid_name(hook: HookPoint) -> str:
    return "sam40" if hook is HookPoint.PROJECTOR else hook.grid.name


def _regenerate(category: PhiCategory, truth: str, rng: random.Random) -> str:
    """Format-valid stand-in that never equals the ground truth."""
    for _ in range(64):
        if category is PhiCategory.MRN:
            cand = f"MRN-{rng.randint(10_000_000, 99_999_999)}"
        elif category is PhiCategory.SSN:
            cand = (f"{rng.randint(100, 772)}-{rng.randint(10, 99)}-"
                    f"{rng.randint(1000, 9999)}")
        elif category is PhiCategory.EMAIL:
            cand = (f"{''.join(rng.choice('abcdefghiklmnoprstu') for _ in range(6))}"
                    f"@{''.join(rng.choice('abcdefghiklmnoprstu') for _ in range(5))}"
                    f".{rng.choice(['com', 'net', 'org'])}")
        else:
            cand = f"ACCT-{rng.randint(100_000, 999_999)}"
        if cand != truth:
            return cand
    raise BackendError(f"could not draw a distinct stand-in for {category}")


_FILLER_ALPHABET = "bcdfglmnprstvaeiou"


def _filler(rng: random.Random, n_chars: int) -> str:
    """Seeded babble: letters and spaces only, so it can never collide
    with ground-truth values or the structured identifier patterns."""
    parts: list[str] = []
    total = 0
    while total < n_chars:
        w = "".join(rng.choice(_FILLER_ALPHABET) for _ in range(rng.randint(3, 9)))
        parts.append(w)
        total += len(w) + 1
    return " ".join(parts)[:n_chars]


def _degradation(build: MaskBuild, cfg: BackendBehaviorConfig) -> str | None:
    sam_hooks = [h for h, m in build.masks.items()
                 if h.on_sam_path and len(m) > 0]
    if len(sam_hooks) >= cfg.multi_hook_degradation_hooks:
        return "multi_hook"
    proj = build.masks.get(HookPoint.PROJECTOR)
    if proj is not None and len(proj) > 0:
        radius = dict(build.strategy.hooks)[HookPoint.PROJECTOR]
        cov = g.coverage(proj, max(len(proj.tiles()), 1))
        if cov >= cfg.projector_coverage_limit and radius >= cfg.projector_radius_limit:
            return "projector_saturation"
    return None


def run_ocr(doc: Document, build: MaskBuild,
            cfg: BackendBehaviorConfig = BackendBehaviorConfig(),
            seed: int = 0) -> OcrOutput:
    """Emit text for a document under the given masks.

    Deterministic for fixed (doc, build, cfg, seed).
    """
    ann_by_element: dict[int, PhiAnnotation] = {}
    for ann in doc.annotations:
        el = doc.element_for(ann)
        ann_by_element[id(el)] = ann

    rng = random.Random(f"phimask-ocr:{doc.id}:{seed}")
    cause = _degradation(build, cfg)
    collapse = cause == "multi_hook"

    lines: list[str] = []
    emissions: list[EmissionRecord] = []
    for el in doc.elements:
        ann = ann_by_element.get(id(el))
        if ann is None:
            lines.append(el.text)
            continue
        if collapse:
            # masking coherence is gone; content is regurgitated whole
            lines.append(el.text)
            emissions.append(EmissionRecord(ann.category, EMISSION_EXACT, ann.value))
            continue
        fraction = _masked_fraction(el, doc, build)
        if fraction < cfg.suppression_threshold:
            lines.append(el.text)
            emissions.append(EmissionRecord(ann.category, EMISSION_EXACT, ann.value))
            continue
        if ann.category.form is PhiForm.STRUCTURED and _label_visible(ann, doc, build, cfg):
            stand_in = _regenerate(ann.category, ann.value, rng)
            lines.append(el.text.replace(ann.value, stand_in))
            emissions.append(
                EmissionRecord(ann.category, EMISSION_REGENERATED, stand_in))
        else:
            remnant = el.text.replace(ann.value, "").strip()
            if remnant:
                lines.append(remnant)
            emissions.append(EmissionRecord(ann.category, EMISSION_SUPPRESSED, None))

    text = "\n".join(lines)
    if cause is not None:
        baseline = len(doc.text())
        mult = (cfg.multi_hook_char_multiplier if collapse
                else cfg.projector_char_multiplier)
        target = round(baseline * mult)
        pad = max(target - len(text) - 1, 0)
        text = text + "\n" + _filler(rng, pad)

    emissions.sort(key=lambda e: e.category.value)
    out = OcrOutput(text=text, char_count=len(text),
                    emissions=tuple(emissions), degraded=cause is not None,
                    degradation_cause=cause)
    _check_emissions(out, doc)
    return out


def _label_visible(ann: PhiAnnotation, doc: Document, build: MaskBuild,
                   cfg: BackendBehaviorConfig) -> bool:
    label_el = Element(ann.context_label, ann.context_bbox)
    return _masked_fraction(label_el, doc, build) < cfg.suppression_threshold


def _check_emissions(out: OcrOutput, doc: Document) -> None:
    for rec in out.emissions:
        if rec.emitted == EMISSION_SUPPRESSED:
            value = doc.annotation(rec.category).value
            if value in out.text:
                raise BackendError(
                    f"suppressed value for {rec.category} still present")


# --- backend registry -----------------------------------------------------


class Backend:
    """Anything that turns (doc, masks) into an OcrOutput."""

    name = "abstract"

    def run(self, doc: Document, build: MaskBuild, seed: int = 0) -> OcrOutput:
        raise NotImplementedError


@dataclass
class SurrogateBackend(Backend):
    cfg: BackendBehaviorConfig = field(default_factory=BackendBehaviorConfig)
    name: str = "surrogate"

    def run(self, doc: Document, build: MaskBuild, seed: int = 0) -> OcrOutput:
        return run_ocr(doc, build, self.cfg, seed)


def output_from_text(doc: Document, text: str) -> OcrOutput:
    """Wrap raw text from an external adapter into an OcrOutput by
    exact-string scanning of the ground-truth annotations."""
    emissions = []
    for ann in sorted(doc.annotations, key=lambda a: a.category.value):
        if ann.value in text:
            emissions.append(EmissionRecord(ann.category, EMISSION_EXACT, ann.value))
        else:
            emissions.append(EmissionRecord(ann.category, EMISSION_SUPPRESSED, None))
    return OcrOutput(text=text, char_count=len(text),
                     emissions=tuple(emissions), degraded=False)


class ConfigurationError(ValueError):
    pass


def get_backend(spec: str = "surrogate") -> Backend:
    """Resolve a backend selector: 'surrogate' or 'adapter:<path>'.

    Adapter paths point at a directory of pre-generated text files named
    <doc_id>.txt, the simplest contract an external model bridge can
    fulfil.
    """
    if spec == "surrogate":
        return SurrogateBackend()
    if spec.startswith("adapter:"):
        return _TextDirBackend(spec.split(":", 1)[1])
    raise ConfigurationError(f"unknown backend {spec!r}")


@dataclass
class _TextDirBackend(Backend):
    root: str
    name: str = "adapter"

    def run(self, doc: Document, build: MaskBuild, seed: int = 0) -> OcrOutput:
        from pathlib import Path
        path = Path(self.root) / f"{doc.id}.txt"
        if not path.exists():
            raise ConfigurationError(f"adapter output missing for {doc.id}")
        return output_from_text(doc, path.read_text(encoding="utf-8"))
