"""Scoring and aggregation.

Reduction is computed in exact rational arithmetic from leak counts
under exact substring matching, and only rendered to one decimal at
report time. Degradation is reported through two independent signals:
the character-count deviation test and the backend's own degraded bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .backend import OcrOutput
from .documents import Document, PhiCategory

B_PER_DOC = len(PhiCategory)  # ground-truth PHI elements per document


@dataclass(frozen=True)
class DocumentScore:
    doc_id: str
    b: int
    l: int
    reduction: Fraction            # percent, exact
    leaked: tuple[PhiCategory, ...]
    char_count: int
    baseline_chars: int
    degraded_chars: bool           # char-count deviation beyond 200%
    degraded_backend: bool         # surrogate's own flag

    @property
    def degraded(self) -> bool:
        return self.degraded_chars or self.degraded_backend


def detect_degradation(out: OcrOutput, baseline_chars: int) -> bool:
    """Deviation of the output length beyond 200% of baseline."""
    if baseline_chars <= 0:
        raise ValueError("baseline_chars must be positive")
    return abs(out.char_count - baseline_chars) / baseline_chars > 2.0


def score(doc: Document, out: OcrOutput) -> DocumentScore:
    """Leak count by exact substring match of ground-truth values."""
    leaked = tuple(a.category for a in doc.annotations if a.value in out.text)
    b = len(doc.annotations)
    l = len(leaked)
    baseline = len(doc.text())
    return DocumentScore(
        doc_id=doc.id, b=b, l=l,
        reduction=Fraction(b - l, b) * 100,
        leaked=leaked,
        char_count=out.char_count,
        baseline_chars=baseline,
        degraded_chars=detect_degradation(out, baseline),
        degraded_backend=out.degraded,
    )


@dataclass(frozen=True)
class StrategyReport:
    strategy_id: str
    strategy_label: str
    doc_scores: tuple[DocumentScore, ...]
    coverage_by_hook: dict[str, dict[str, float]]
    mask_counts: dict[str, int]

    @property
    def aggregate_reduction(self) -> Fraction:
        if not self.doc_scores:
            return Fraction(0)
        return sum((s.reduction for s in self.doc_scores), Fraction(0)) / len(
            self.doc_scores)

    @property
    def degraded(self) -> bool:
        return any(s.degraded for s in self.doc_scores)

    def category_masked_rate(self, category: PhiCategory) -> Fraction:
        if not self.doc_scores:
            return Fraction(0)
        masked = sum(1 for s in self.doc_scores if category not in s.leaked)
        return Fraction(masked, len(self.doc_scores)) * 100


@dataclass(frozen=True)
class CascadeStage:
    stage: str
    method: str
    remaining: Fraction            # expected leaked count per document
    stage_reduction: Fraction      # percent removed of what entered the stage
    cumulative: Fraction           # percent of all PHI removed so far


def percent(x: Fraction, digits: int = 1) -> str:
    return f"{float(x):.{digits}f}"


def cascade_score(stage1_scores: list[DocumentScore],
                  stage2_leaks: list[int]) -> list[CascadeStage]:
    """Three-row cascade table from measured per-document leak counts."""
    if len(stage1_scores) != len(stage2_leaks):
        raise ValueError("stage lists differ in length")
    n = len(stage1_scores)
    b = Fraction(sum(s.b for s in stage1_scores), n)
    l1 = Fraction(sum(s.l for s in stage1_scores), n)
    l2 = Fraction(sum(stage2_leaks), n)
    if l2 > l1:
        raise ValueError("stage 2 cannot add leaks")
    rows = [CascadeStage("baseline", "none", b, Fraction(0), Fraction(0))]
    r1 = Fraction(b - l1, b) * 100
    rows.append(CascadeStage("stage1", "vision masking", l1,
                             r1, r1))
    stage2_frac = Fraction(0) if l1 == 0 else Fraction(l1 - l2, l1) * 100
    cum = Fraction(b - l2, b) * 100
    rows.append(CascadeStage("stage2", "pattern redaction", l2,
                             stage2_frac, cum))
    return rows


def expected_cascade(r1: Fraction, accuracy: Fraction) -> Fraction:
    """Closed-form cumulative reduction: r1 + a * (100 - r1)."""
    return r1 + accuracy * (100 - r1)
