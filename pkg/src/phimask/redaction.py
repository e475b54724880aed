"""Pattern-based text redaction, the second stage of the cascade.

Rules are the four structured-identifier patterns applied to OCR text.
Matching is leftmost-longest and non-overlapping so spans do not depend
on engine quirks. An accuracy below one skips each match independently
under a seeded generator, modelling an imperfect downstream detector.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass
from pathlib import Path

from .documents import PhiCategory


@dataclass(frozen=True)
class RedactionRule:
    category: PhiCategory
    pattern: re.Pattern
    replacement: str

    def __post_init__(self) -> None:
        if self.pattern.search(self.replacement):
            raise ValueError(
                f"replacement {self.replacement!r} matches its own pattern")


@dataclass(frozen=True)
class RedactionHit:
    category: PhiCategory
    start: int
    end: int
    matched: str
    applied: bool


def _rule(category: PhiCategory, pattern: str) -> RedactionRule:
    token = f"[REDACTED-{category.value.upper()}]"
    return RedactionRule(category, re.compile(pattern), token)


# The email pattern's dot is deliberately unescaped: it reproduces the
# deployed rule set verbatim, wildcard and all.
DEFAULT_RULES = (
    _rule(PhiCategory.MRN, r"MRN-\d+"),
    _rule(PhiCategory.SSN, r"\d{3}-\d{2}-\d{4}"),
    _rule(PhiCategory.EMAIL, r"\w+@\w+.\w+"),
    _rule(PhiCategory.ACCOUNT, r"ACCT-\d+"),
)


class RuleError(ValueError):
    pass


def load_rules(path: str | Path) -> tuple[RedactionRule, ...]:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    rules = []
    for rec in raw:
        try:
            pattern = re.compile(rec["pattern"])
        except re.error as exc:
            raise RuleError(f"bad pattern {rec['pattern']!r}: {exc}") from exc
        rule = RedactionRule(PhiCategory(rec["category"]), pattern,
                             rec["replacement"])
        rules.append(rule)
    return tuple(rules)


def dump_rules(rules: tuple[RedactionRule, ...]) -> list[dict]:
    return [{"category": r.category.value, "pattern": r.pattern.pattern,
             "replacement": r.replacement} for r in rules]


def _collect_matches(text: str, rules) -> list[tuple[int, int, RedactionRule, str]]:
    """All candidate spans, resolved leftmost-longest without overlap."""
    candidates = []
    for idx, rule in enumerate(rules):
        for m in rule.pattern.finditer(text):
            candidates.append((m.start(), -(m.end() - m.start()), idx,
                               m.end(), rule, m.group()))
    candidates.sort()
    chosen: list[tuple[int, int, RedactionRule, str]] = []
    cursor = 0
    for start, _neg_len, _idx, end, rule, matched in candidates:
        if start >= cursor:
            chosen.append((start, end, rule, matched))
            cursor = end
    return chosen


def redact(text: str, rules=DEFAULT_RULES, accuracy: float = 1.0,
           seed: int = 0) -> tuple[str, list[RedactionHit]]:
    """Replace pattern matches with their redaction tokens.

    Each match is applied independently with probability `accuracy`
    (seeded, deterministic). Returns the new text and the hit list,
    including matches that the simulated detector missed.
    """
    if not 0 < accuracy <= 1:
        raise RuleError(f"accuracy must be in (0, 1], got {accuracy}")
    rng = random.Random(f"phimask-redact:{seed}")
    hits: list[RedactionHit] = []
    out: list[str] = []
    cursor = 0
    for start, end, rule, matched in _collect_matches(text, rules):
        applied = accuracy >= 1.0 or rng.random() < accuracy
        hits.append(RedactionHit(rule.category, start, end, matched, applied))
        if applied:
            out.append(text[cursor:start])
            out.append(rule.replacement)
            cursor = end
    out.append(text[cursor:])
    return "".join(out), hits
