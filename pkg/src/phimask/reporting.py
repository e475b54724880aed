"""Report rendering: delimited results, audit log, text tables, figures.

Everything written here is deterministic for a fixed run configuration:
no timestamps, stable ordering, fixed float formatting. Figures are
rendered to PNG files next to the delimited output.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .documents import PhiCategory
from .evaluation import CascadeStage, StrategyReport, percent

CATEGORY_ORDER = [c.value for c in PhiCategory]

RESULTS_FIELDS = ["strategy_id", "strategy_label", "radius", "coverage_by_hook",
                  "reduction", "per_category", "degraded"]


def _row(report: StrategyReport) -> dict:
    radii = report.strategy_label.split("r=")[-1] if "r=" in report.strategy_label else ""
    cov = {hook: round(covs["tiles_in_use"], 4)
           for hook, covs in sorted(report.coverage_by_hook.items())}
    per_cat = {c.value: percent(report.category_masked_rate(c))
               for c in PhiCategory}
    return {
        "strategy_id": report.strategy_id,
        "strategy_label": report.strategy_label,
        "radius": radii,
        "coverage_by_hook": json.dumps(cov, sort_keys=True),
        "reduction": percent(report.aggregate_reduction),
        "per_category": json.dumps(per_cat, sort_keys=True),
        "degraded": str(report.degraded).lower(),
    }


def write_results_csv(path: Path, reports: list[StrategyReport]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULTS_FIELDS)
        writer.writeheader()
        for rep in reports:
            writer.writerow(_row(rep))


def results_payload(reports: list[StrategyReport]) -> dict:
    out = []
    for rep in reports:
        out.append({
            "strategy_id": rep.strategy_id,
            "strategy_label": rep.strategy_label,
            "reduction": percent(rep.aggregate_reduction),
            "reduction_exact": [rep.aggregate_reduction.numerator,
                                rep.aggregate_reduction.denominator],
            "degraded": rep.degraded,
            "coverage_by_hook": {h: {k: round(v, 6) for k, v in c.items()}
                                 for h, c in sorted(rep.coverage_by_hook.items())},
            "mask_counts": dict(sorted(rep.mask_counts.items())),
            "per_category_masked_rate": {
                c.value: percent(rep.category_masked_rate(c))
                for c in PhiCategory},
            "documents": [{
                "doc_id": s.doc_id, "b": s.b, "l": s.l,
                "reduction": percent(s.reduction),
                "leaked": sorted(c.value for c in s.leaked),
                "char_count": s.char_count,
                "baseline_chars": s.baseline_chars,
                "degraded_chars": s.degraded_chars,
                "degraded_backend": s.degraded_backend,
            } for s in rep.doc_scores],
        })
    return {"results": out}


def write_results_json(path: Path, reports: list[StrategyReport]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(results_payload(reports), fh, sort_keys=True, indent=1)
        fh.write("\n")


def write_audit_log(path: Path, audit_records: list[dict]) -> None:
    """One JSONL record per (document, strategy): which boxes were
    masked at which hook points, and what the redactor later hit."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in audit_records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


_HOOK_SHORT = {"sam_block_6": "sam6", "sam_block_9": "sam9",
               "sam_block_11": "sam11", "compression_net2": "comp",
               "vision_encoder": "vit", "projector": "proj"}


def render_strategy_table(reports: list[StrategyReport]) -> str:
    header = (f"{'strategy':<12} {'coverage by hook':<46} "
              f"{'reduction':>9} {'status':>9}")
    lines = [header, "-" * len(header)]
    for rep in reports:
        cov = " ".join(
            f"{_HOOK_SHORT.get(hook, hook)}:{covs['tiles_in_use'] * 100:.1f}%"
            for hook, covs in sorted(rep.coverage_by_hook.items()))
        status = "degraded" if rep.degraded else "stable"
        lines.append(f"{rep.strategy_label:<12} {cov:<46} "
                     f"{percent(rep.aggregate_reduction):>8}% {status:>9}")
    return "\n".join(lines) + "\n"


def render_cascade_table(stages: list[CascadeStage], b: int = 7) -> str:
    header = (f"{'stage':<10} {'method':<18} {'remaining':>12} "
              f"{'stage cut':>10} {'cumulative':>11}")
    lines = [header, "-" * len(header)]
    for s in stages:
        remaining = f"{float(s.remaining):.2f}/{b}"
        lines.append(f"{s.stage:<10} {s.method:<18} {remaining:>12} "
                     f"{percent(s.stage_reduction):>9}% {percent(s.cumulative):>10}%")
    return "\n".join(lines) + "\n"


def parse_results_csv(path: Path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


# --- figures ---------------------------------------------------------------


def figure_coverage_vs_reduction(reports: list[StrategyReport], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for rep in reports:
        if not rep.coverage_by_hook:
            continue
        cov = max(c["tiles_in_use"] for c in rep.coverage_by_hook.values()) * 100
        red = float(rep.aggregate_reduction)
        color = "tab:red" if rep.degraded else "tab:blue"
        ax.scatter(cov, red, color=color, s=28, zorder=3)
        ax.annotate(rep.strategy_label, (cov, red), fontsize=7,
                    xytext=(3, 4), textcoords="offset points")
    ax.axhline(300 / 7, color="gray", ls="--", lw=0.8,
               label="stable plateau")
    ax.set_xlabel("spatial coverage (%)")
    ax.set_ylabel("PHI reduction (%)")
    ax.set_xlim(0, 105)
    ax.set_ylim(-5, 105)
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def figure_category_rates(report: StrategyReport, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    cats = list(PhiCategory)
    rates = [float(report.category_masked_rate(c)) for c in cats]
    colors = ["tab:green" if r >= 50 else "tab:red" for r in rates]
    ax.bar([c.value for c in cats], rates, color=colors)
    ax.set_ylabel("masked rate (%)")
    ax.set_ylim(0, 105)
    ax.set_title(report.strategy_label)
    plt.setp(ax.get_xticklabels(), rotation=30, ha="right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def figure_cascade(stages: list[CascadeStage], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(5.6, 4.0))
    names = [s.stage for s in stages]
    cum = [float(s.cumulative) for s in stages]
    ax.bar(names, cum, color="tab:blue")
    for i, v in enumerate(cum):
        ax.text(i, v + 1.5, f"{v:.1f}%", ha="center", fontsize=9)
    ax.set_ylabel("cumulative PHI reduction (%)")
    ax.set_ylim(0, 112)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
