"""Synthetic annotated billing statements.

A document is a logical page layout: text elements with pixel bounding
boxes at 300 DPI, plus ground-truth annotations for the seven evaluated
PHI categories. Field positions are fixed per template so masking
geometry is identical across seeds; only the values and filler text
vary.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .grid import Rect

PAGE_W, PAGE_H = 2550, 3300  # 8.5 x 11 in at 300 DPI

# unmasked output length band the generator guarantees
BASELINE_CHAR_BAND = (1995, 2078)


class PhiForm(Enum):
    LONG_FORM = "long_form"
    STRUCTURED = "structured"


class PhiCategory(Enum):
    NAME = "name"
    DATE_OF_BIRTH = "date_of_birth"
    ADDRESS = "address"
    MRN = "mrn"
    SSN = "ssn"
    EMAIL = "email"
    ACCOUNT = "account"

    @property
    def form(self) -> PhiForm:
        if self in (PhiCategory.NAME, PhiCategory.DATE_OF_BIRTH,
                    PhiCategory.ADDRESS):
            return PhiForm.LONG_FORM
        return PhiForm.STRUCTURED


LONG_FORM = tuple(c for c in PhiCategory if c.form is PhiForm.LONG_FORM)
STRUCTURED = tuple(c for c in PhiCategory if c.form is PhiForm.STRUCTURED)

# value-format checks; structured ones double as leak signatures
CATEGORY_PATTERNS = {
    PhiCategory.MRN: re.compile(r"^MRN-\d{8}$"),
    PhiCategory.SSN: re.compile(r"^\d{3}-\d{2}-\d{4}$"),
    PhiCategory.EMAIL: re.compile(r"^[a-z]+@[a-z]+\.[a-z]+$"),
    PhiCategory.ACCOUNT: re.compile(r"^ACCT-\d{6}$"),
    PhiCategory.NAME: re.compile(r"^[A-Z][a-z]+ [A-Z][a-z]+$"),
    PhiCategory.DATE_OF_BIRTH: re.compile(r"^\d{4}-\d{2}-\d{2}$"),
    PhiCategory.ADDRESS: re.compile(r"^\d+ .+, .+, [A-Z]{2} \d{5}$"),
}


@dataclass(frozen=True)
class Element:
    text: str
    bbox: Rect


@dataclass(frozen=True)
class PhiAnnotation:
    category: PhiCategory
    bbox: Rect
    value: str
    context_label: str
    context_bbox: Rect

    def __post_init__(self) -> None:
        x, y, w, h = self.bbox
        if w <= 0 or h <= 0:
            raise ValueError(f"degenerate bbox for {self.category}")
        if x < 0 or y < 0 or x + w > PAGE_W or y + h > PAGE_H:
            raise ValueError(f"bbox outside page for {self.category}")
        if not self.value:
            raise ValueError(f"empty value for {self.category}")
        if not CATEGORY_PATTERNS[self.category].match(self.value):
            raise ValueError(f"malformed {self.category.value}: {self.value!r}")


@dataclass(frozen=True)
class Document:
    id: str
    width: int
    height: int
    elements: tuple[Element, ...]
    annotations: tuple[PhiAnnotation, ...]
    seed: int
    template: str

    @property
    def page(self) -> tuple[int, int]:
        return (self.width, self.height)

    def annotation(self, category: PhiCategory) -> PhiAnnotation:
        for a in self.annotations:
            if a.category is category:
                return a
        raise KeyError(category)

    def element_for(self, ann: PhiAnnotation) -> Element:
        hits = [e for e in self.elements if ann.value in e.text]
        if len(hits) != 1:
            raise ValueError(
                f"value for {ann.category} found in {len(hits)} elements")
        return hits[0]

    def text(self) -> str:
        return "\n".join(e.text for e in self.elements)

    def validate(self) -> None:
        cats = [a.category for a in self.annotations]
        if sorted(c.value for c in cats) != sorted(c.value for c in PhiCategory):
            raise ValueError("expected exactly one annotation per category")
        for a in self.annotations:
            self.element_for(a)
        boxes = [a.bbox for a in self.annotations]
        for i in range(len(boxes)):
            for j in range(i + 1, len(boxes)):
                if _overlap(boxes[i], boxes[j]):
                    raise ValueError(
                        f"annotation bboxes overlap: {boxes[i]} {boxes[j]}")


def _overlap(a: Rect, b: Rect) -> bool:
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    return ax < bx + bw and bx < ax + aw and ay < by + bh and by < ay + ah


# --- value generators ----------------------------------------------------

FIRST_NAMES = ["Martha", "Daniel", "Susana", "Harold", "Yvonne", "Tobias",
               "Priya", "Clement", "Ingrid", "Walter", "Felipe", "Noreen"]
LAST_NAMES = ["Whitfield", "Okafor", "Lindqvist", "Moreau", "Castellanos",
              "Brar", "Novak", "Tanaka", "Delgado", "Hirsch", "Abernathy"]
STREETS = ["Cedar Hollow Rd", "Wren St", "Marlow Ave", "Juniper Ct",
           "Halcyon Way", "Basswood Ln", "Ferry Landing Dr"]
CITIES = [("Las Vegas", "NV"), ("Reno", "NV"), ("Henderson", "NV"),
          ("Boulder City", "NV"), ("Sparks", "NV")]
EMAIL_WORDS = ["river", "maple", "quartz", "harbor", "violet", "summit",
               "willow", "larch", "pebble", "onyx"]
EMAIL_HOSTS = ["mailhub", "postbox", "courier", "inboxly"]
EMAIL_TLDS = ["com", "net", "org"]

SERVICES = [
    ("Office visit, established patient, level {n}", 135, 410),
    ("Comprehensive metabolic panel", 48, 190),
    ("Lipid panel with reflex", 52, 160),
    ("Venipuncture, routine", 12, 35),
    ("Radiograph, chest, two views", 88, 240),
    ("Therapeutic exercise, 15 min units x{n}", 40, 150),
    ("Immunization administration", 25, 70),
    ("Urinalysis, automated, with microscopy", 18, 55),
]


def _gen_values(rng: random.Random) -> dict[PhiCategory, str]:
    first = rng.choice(FIRST_NAMES)
    last = rng.choice(LAST_NAMES)
    city, state = rng.choice(CITIES)
    year = rng.randint(1934, 2003)
    month = rng.randint(1, 12)
    day = rng.randint(1, 28)
    return {
        PhiCategory.NAME: f"{first} {last}",
        PhiCategory.DATE_OF_BIRTH: f"{year:04d}-{month:02d}-{day:02d}",
        PhiCategory.ADDRESS: (f"{rng.randint(10, 9899)} {rng.choice(STREETS)}, "
                              f"{city}, {state} {rng.randint(89001, 89199)}"),
        PhiCategory.MRN: f"MRN-{rng.randint(10_000_000, 99_999_999)}",
        PhiCategory.SSN: (f"{rng.randint(100, 772)}-{rng.randint(10, 99)}-"
                          f"{rng.randint(1000, 9999)}"),
        PhiCategory.EMAIL: (f"{rng.choice(EMAIL_WORDS)}@{rng.choice(EMAIL_HOSTS)}"
                            f".{rng.choice(EMAIL_TLDS)}"),
        PhiCategory.ACCOUNT: f"ACCT-{rng.randint(100_000, 999_999)}",
    }


# --- templates -----------------------------------------------------------

# Field boxes are pinned so that, on the SAM grid, long-form values
# dominate their elements while structured values sit in a narrow
# right-anchored slot behind a wide caption. That asymmetry is what
# makes masking geometry behave differently for the two classes.

@dataclass(frozen=True)
class FieldLayout:
    category: PhiCategory
    value_box: Rect
    label: str
    label_box: Rect
    # structured lines are a single element spanning label..value;
    # long-form captions are separate elements so the value stands alone
    joined: bool


@dataclass(frozen=True)
class Template:
    id: str
    fields: tuple[FieldLayout, ...]

    def field(self, category: PhiCategory) -> FieldLayout:
        for f in self.fields:
            if f.category is category:
                return f
        raise KeyError(category)


_BILLING_V1_FIELDS = (
    FieldLayout(PhiCategory.NAME, (208, 104, 765, 48),
                "Name:", (52, 104, 130, 48), joined=False),
    FieldLayout(PhiCategory.DATE_OF_BIRTH, (180, 208, 357, 40),
                "DOB:", (52, 208, 104, 40), joined=False),
    FieldLayout(PhiCategory.MRN, (984, 412, 40, 40),
                "Medical Record Number:", (52, 412, 572, 40), joined=True),
    FieldLayout(PhiCategory.SSN, (984, 462, 40, 40),
                "Social Security Number:", (52, 462, 598, 40), joined=True),
    FieldLayout(PhiCategory.EMAIL, (984, 514, 40, 40),
                "Email Address:", (52, 514, 364, 40), joined=True),
    FieldLayout(PhiCategory.ACCOUNT, (984, 568, 40, 20),
                "Account Number:", (52, 568, 390, 20), joined=True),
    FieldLayout(PhiCategory.ADDRESS, (180, 768, 767, 205),
                "Bill To:", (52, 712, 208, 44), joined=False),
)

# same fields, but the address block and the email value live in the
# second tile column, and the email element straddles the tile seam
_BILLING_V2_FIELDS = tuple(
    f if f.category not in (PhiCategory.ADDRESS, PhiCategory.EMAIL) else (
        FieldLayout(PhiCategory.ADDRESS, (1204, 768, 767, 205),
                    "Bill To:", (1076, 712, 208, 44), joined=False)
        if f.category is PhiCategory.ADDRESS else
        FieldLayout(PhiCategory.EMAIL, (1280, 514, 40, 40),
                    "Email Address:", (52, 514, 364, 40), joined=True)
    )
    for f in _BILLING_V1_FIELDS
)

TEMPLATES = {
    "billing-v1": Template("billing-v1", _BILLING_V1_FIELDS),
    "billing-v2": Template("billing-v2", _BILLING_V2_FIELDS),
}


class UnknownTemplateError(KeyError):
    pass


def _field_elements(tpl: Template, values: dict[PhiCategory, str]
                    ) -> tuple[list[Element], list[PhiAnnotation]]:
    elements: list[Element] = []
    annotations: list[PhiAnnotation] = []
    for f in tpl.fields:
        value = values[f.category]
        if f.joined:
            x0 = f.label_box[0]
            x1 = f.value_box[0] + f.value_box[2]
            y0 = min(f.label_box[1], f.value_box[1])
            y1 = max(f.label_box[1] + f.label_box[3],
                     f.value_box[1] + f.value_box[3])
            elements.append(Element(f"{f.label} {value}",
                                    (x0, y0, x1 - x0, y1 - y0)))
        else:
            elements.append(Element(f.label, f.label_box))
            elements.append(Element(value, f.value_box))
        annotations.append(PhiAnnotation(
            category=f.category, bbox=f.value_box, value=value,
            context_label=f.label, context_bbox=f.label_box))
    return elements, annotations


def _filler_elements(rng: random.Random, phi_chars: int) -> list[Element]:
    """Non-PHI content: header, service table, totals, padded notes.

    The notes line is sized so the whole document text lands inside
    BASELINE_CHAR_BAND. Filler lives outside the PHI tile.
    """
    lines: list[tuple[str, Rect]] = []
    lines.append(("Sierra Meadows Medical Group", (1100, 104, 900, 54)))
    lines.append(("Consolidated Billing Statement", (1100, 170, 860, 48)))
    lines.append((f"Statement period: 2024-0{rng.randint(1, 9)}", (1100, 230, 600, 40)))
    lines.append(("Service description          Qty    Charge", (200, 1180, 1400, 44)))
    total = 0
    for i in range(6):
        desc, lo, hi = SERVICES[rng.randrange(len(SERVICES))]
        desc = desc.format(n=rng.randint(1, 4))
        amount = rng.randint(lo, hi)
        total += amount
        lines.append((f"{desc}  x1  ${amount}.00",
                      (200, 1240 + i * 60, 1700, 44)))
    lines.append((f"Total charges this period: ${total}.00", (200, 1640, 1100, 44)))
    lines.append((f"Payments received: ${rng.randint(0, total)}.00",
                  (200, 1700, 1000, 44)))
    lines.append(("Questions about this statement? Call the billing office "
                  "weekdays between eight and five.", (200, 1800, 2100, 44)))
    lines.append(("Payment is due thirty days from the statement date. A "
                  "finance charge may apply to past-due balances.",
                  (200, 1860, 2100, 44)))
    lines.append(("This statement reflects charges processed before the "
                  "period closing date; pending claims are excluded.",
                  (200, 1920, 2100, 44)))

    target = BASELINE_CHAR_BAND[0] + rng.randrange(
        BASELINE_CHAR_BAND[1] - BASELINE_CHAR_BAND[0] - 20)
    fixed = phi_chars + sum(len(t) for t, _ in lines) + len(lines) + 7
    pad = max(target - fixed, 24)
    words = []
    while sum(len(w) + 1 for w in words) < pad:
        words.append("".join(rng.choice("aeiou" if k % 2 else "bcdfglmnprst")
                             for k in range(rng.randint(3, 7))))
    note = ("Notes: " + " ".join(words))[:pad]
    lines.append((note, (200, 2000, 2100, 44)))
    return [Element(t, b) for t, b in lines]


def generate_document(seed: int, template: str) -> Document:
    """Deterministic document for (seed, template)."""
    if template not in TEMPLATES:
        raise UnknownTemplateError(template)
    tpl = TEMPLATES[template]
    rng = random.Random(f"phimask-doc:{template}:{seed}")
    values = _gen_values(rng)
    field_els, annotations = _field_elements(tpl, values)
    phi_chars = sum(len(e.text) for e in field_els)
    filler = _filler_elements(rng, phi_chars)
    elements = tuple(sorted(field_els + filler, key=lambda e: (e.bbox[1], e.bbox[0])))
    doc = Document(
        id=f"{template}-{seed:08x}",
        width=PAGE_W, height=PAGE_H,
        elements=elements,
        annotations=tuple(annotations),
        seed=seed, template=template,
    )
    doc.validate()
    n = len(doc.text())
    if not (BASELINE_CHAR_BAND[0] <= n <= BASELINE_CHAR_BAND[1]):
        raise AssertionError(f"document text length {n} outside baseline band")
    return doc


# --- corpus serialization -------------------------------------------------

# Sidecar record fields are normative for downstream consumers.
SIDECAR_FIELDS = ("doc_id", "category", "x", "y", "w", "h", "value",
                  "context_label", "context_bbox")


def _doc_payload(doc: Document) -> dict:
    return {
        "id": doc.id,
        "template": doc.template,
        "seed": doc.seed,
        "width": doc.width,
        "height": doc.height,
        "elements": [{"text": e.text, "bbox": list(e.bbox)} for e in doc.elements],
    }


def write_corpus(n: int, seed: int, path: str | Path,
                 template: str = "billing-v1") -> dict:
    """Write n documents plus annotation sidecars and a manifest."""
    if n < 1:
        raise ValueError("need at least one document")
    if template not in TEMPLATES:
        raise UnknownTemplateError(template)
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    for i in range(n):
        doc_seed = seed + i
        doc = generate_document(doc_seed, template)
        doc_file = root / f"{doc.id}.doc.json"
        with open(doc_file, "w", encoding="utf-8") as fh:
            json.dump(_doc_payload(doc), fh, sort_keys=True, indent=1)
            fh.write("\n")
        ann_file = root / f"{doc.id}.ann.jsonl"
        with open(ann_file, "w", encoding="utf-8") as fh:
            for a in doc.annotations:
                x, y, w, h = a.bbox
                fh.write(json.dumps({
                    "doc_id": doc.id, "category": a.category.value,
                    "x": x, "y": y, "w": w, "h": h, "value": a.value,
                    "context_label": a.context_label,
                    "context_bbox": list(a.context_bbox),
                }, sort_keys=True) + "\n")
        entries.append({"doc_id": doc.id, "seed": doc_seed, "template": template})
    manifest = {"count": n, "base_seed": seed, "template": template,
                "documents": entries}
    with open(root / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=1)
        fh.write("\n")
    return manifest


def load_corpus(path: str | Path) -> list[Document]:
    root = Path(path)
    with open(root / "manifest.json", encoding="utf-8") as fh:
        manifest = json.load(fh)
    docs = []
    for entry in manifest["documents"]:
        docs.append(load_document(root, entry["doc_id"]))
    return docs


def load_document(root: str | Path, doc_id: str) -> Document:
    root = Path(root)
    with open(root / f"{doc_id}.doc.json", encoding="utf-8") as fh:
        payload = json.load(fh)
    annotations = []
    with open(root / f"{doc_id}.ann.jsonl", encoding="utf-8") as fh:
        for line in fh:
            rec = json.loads(line)
            annotations.append(PhiAnnotation(
                category=PhiCategory(rec["category"]),
                bbox=(rec["x"], rec["y"], rec["w"], rec["h"]),
                value=rec["value"],
                context_label=rec["context_label"],
                context_bbox=tuple(rec["context_bbox"]),
            ))
    doc = Document(
        id=payload["id"], width=payload["width"], height=payload["height"],
        elements=tuple(Element(e["text"], tuple(e["bbox"]))
                       for e in payload["elements"]),
        annotations=tuple(annotations),
        seed=payload["seed"], template=payload["template"],
    )
    doc.validate()
    return doc
