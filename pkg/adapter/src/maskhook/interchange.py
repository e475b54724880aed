"""Mask-set interchange file I/O.

One JSON record per line, one line per replaced patch. The adapter
never derives geometry itself; these records are the single source of
truth for what gets replaced where.
"""

from __future__ import annotations

import json
from pathlib import Path

FIELDS = ("doc_id", "hook_point", "grid_name", "tile_row", "tile_col",
          "row", "col", "radius")


class InterchangeError(ValueError):
    pass


def read_records(path: str | Path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            missing = set(FIELDS) - set(rec)
            if missing:
                raise InterchangeError(
                    f"{path}:{lineno}: missing fields {sorted(missing)}")
            records.append({k: rec[k] for k in FIELDS})
    return records


def write_records(path: str | Path, records: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps({k: rec[k] for k in FIELDS}, sort_keys=True)
                     + "\n")


def by_hook(records: list[dict]) -> dict[str, list[dict]]:
    grouped: dict[str, list[dict]] = {}
    for rec in records:
        grouped.setdefault(rec["hook_point"], []).append(rec)
    return grouped
