"""Experiment runner CLI.

Subcommands: generate | run | sweep | hybrid | export-masks.

Runs are fail-closed: outputs are staged in a scratch directory and
moved into place only after the whole run has succeeded, so a failing
run leaves nothing partial behind. Seeds are mandatory inputs, never
wall-clock. A config file, when given, overrides the flags it names.
The only environment variable honored is PHIMASK_OUTPUT_DIR.
"""

from __future__ import annotations

import argparse
import json
import os
import shutil
import sys
import tempfile
from pathlib import Path

from . import runner as rn
from . import strategies as st
from .backend import ConfigurationError, get_backend
from .documents import TEMPLATES, UnknownTemplateError, load_corpus, write_corpus
from .evaluation import percent
from .redaction import DEFAULT_RULES, load_rules
from . import reporting as rp


class CliError(RuntimeError):
    pass


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="phimask",
        description="vision-token masking harness for document PHI redaction")
    sub = p.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a synthetic corpus")
    gen.add_argument("--count", type=int, default=100)
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--template", default="billing-v1",
                     choices=sorted(TEMPLATES))
    gen.add_argument("--out", type=Path, default=None)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--corpus", type=Path, default=None,
                        help="existing corpus directory")
    common.add_argument("--count", type=int, default=None,
                        help="generate this many documents on the fly")
    common.add_argument("--seed", type=int, default=None,
                        help="base seed for on-the-fly generation")
    common.add_argument("--template", default="billing-v1",
                        choices=sorted(TEMPLATES))
    common.add_argument("--backend", default="surrogate")
    common.add_argument("--run-seed", type=int, default=0,
                        help="seed for backend and redaction draws")
    common.add_argument("--out", type=Path, default=None)
    common.add_argument("--config", type=Path, default=None,
                        help="JSON config; values override flags")
    common.add_argument("--no-figures", action="store_true")

    run = sub.add_parser("run", parents=[common],
                         help="one strategy over a corpus")
    run.add_argument("--strategy", default="V3",
                     help="preset id (V3..V9, baseline) or @file.json")
    run.add_argument("--radius", type=int, default=None)
    run.add_argument("--radius2", type=int, default=None)

    sub.add_parser("sweep", parents=[common],
                   help="all benchmark rows plus the radius ablation grid")

    hyb = sub.add_parser("hybrid", parents=[common],
                         help="vision masking followed by pattern redaction")
    hyb.add_argument("--strategy", default="V3")
    hyb.add_argument("--radius", type=int, default=None)
    hyb.add_argument("--radius2", type=int, default=None)
    hyb.add_argument("--accuracy", type=float, default=0.8)
    hyb.add_argument("--rules", type=Path, default=None)

    exp = sub.add_parser("export-masks", parents=[common],
                         help="write the mask interchange file")
    exp.add_argument("--strategy", default="V3")
    exp.add_argument("--radius", type=int, default=None)
    exp.add_argument("--radius2", type=int, default=None)

    return p


def _apply_config_file(args: argparse.Namespace) -> None:
    if getattr(args, "config", None) is None:
        return
    with open(args.config, encoding="utf-8") as fh:
        overrides = json.load(fh)
    for key, value in overrides.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise CliError(f"unknown config key {key!r}")
        if attr in ("corpus", "out", "rules"):
            value = Path(value)
        setattr(args, attr, value)


def _output_dir(args: argparse.Namespace) -> Path:
    if getattr(args, "out", None) is not None:
        return Path(args.out)
    env = os.environ.get("PHIMASK_OUTPUT_DIR")
    if env:
        return Path(env)
    return Path("phimask-out")


def _load_docs(args: argparse.Namespace):
    has_corpus = getattr(args, "corpus", None) is not None
    has_gen = args.count is not None or args.seed is not None
    if has_corpus and has_gen:
        raise CliError("give either --corpus or --count/--seed, not both")
    if has_corpus:
        return load_corpus(args.corpus)
    if args.count is None or args.seed is None:
        raise CliError("need --corpus, or both --count and --seed")
    from .documents import generate_document
    return [generate_document(args.seed + i, args.template)
            for i in range(args.count)]


def _strategy(args: argparse.Namespace) -> st.StrategyConfig:
    name = args.strategy
    if name.startswith("@"):
        return st.load_strategy_file(name[1:])
    try:
        return st.preset(name, args.radius, args.radius2)
    except st.UnknownPresetError as exc:
        raise CliError(f"unknown strategy preset {exc}") from exc


def _stage_outputs(final_dir: Path):
    final_dir.parent.mkdir(parents=True, exist_ok=True)
    return Path(tempfile.mkdtemp(prefix=".phimask-stage-",
                                 dir=final_dir.parent))


def _commit(stage: Path, final_dir: Path) -> None:
    if final_dir.exists():
        shutil.rmtree(final_dir)
    os.replace(stage, final_dir)


def cmd_generate(args) -> int:
    out = _output_dir(args)
    stage = _stage_outputs(out)
    try:
        manifest = write_corpus(args.count, args.seed, stage, args.template)
    except Exception:
        shutil.rmtree(stage, ignore_errors=True)
        raise
    _commit(stage, out)
    print(f"wrote {manifest['count']} documents to {out}")
    return 0


def _emit_run_reports(stage: Path, runs: list[rn.StrategyRun],
                      figures: bool) -> None:
    reports = [r.report for r in runs]
    rp.write_results_csv(stage / "results.csv", reports)
    rp.write_results_json(stage / "results.json", reports)
    audit = [rec for r in runs for rec in r.audit]
    rp.write_audit_log(stage / "audit.jsonl", audit)
    (stage / "report.txt").write_text(rp.render_strategy_table(reports),
                                      encoding="utf-8")
    if figures:
        figdir = stage / "figures"
        figdir.mkdir()
        rp.figure_coverage_vs_reduction(reports, figdir / "coverage_vs_reduction.png")
        rp.figure_category_rates(reports[0], figdir / "category_rates.png")


def cmd_run(args) -> int:
    docs = _load_docs(args)
    cfg = _strategy(args)
    backend = get_backend(args.backend)
    out = _output_dir(args)
    stage = _stage_outputs(out)
    try:
        srun = rn.run_strategy(docs, cfg, backend, seed=args.run_seed)
        _emit_run_reports(stage, [srun], not args.no_figures)
    except Exception:
        shutil.rmtree(stage, ignore_errors=True)
        raise
    _commit(stage, out)
    rep = srun.report
    status = "degraded" if rep.degraded else "stable"
    print(f"{rep.strategy_label}: reduction {percent(rep.aggregate_reduction)}% "
          f"({status}) over {len(docs)} documents -> {out}")
    return 0


def cmd_sweep(args) -> int:
    docs = _load_docs(args)
    backend = get_backend(args.backend)
    out = _output_dir(args)
    stage = _stage_outputs(out)
    try:
        table, ablation = rn.run_sweep(docs, backend, seed=args.run_seed)
        _emit_run_reports(stage, table, not args.no_figures)
        rp.write_results_csv(stage / "ablation.csv", [r.report for r in ablation])
        (stage / "ablation.txt").write_text(
            rp.render_strategy_table([r.report for r in ablation]),
            encoding="utf-8")
    except Exception:
        shutil.rmtree(stage, ignore_errors=True)
        raise
    _commit(stage, out)
    print(f"swept {len(table)} benchmark rows and {len(ablation)} "
          f"ablation cells over {len(docs)} documents -> {out}")
    return 0


def cmd_hybrid(args) -> int:
    if not 0 < args.accuracy <= 1:
        raise CliError(f"accuracy must be in (0, 1], got {args.accuracy}")
    docs = _load_docs(args)
    cfg = _strategy(args)
    backend = get_backend(args.backend)
    rules = load_rules(args.rules) if args.rules else DEFAULT_RULES
    out = _output_dir(args)
    stage = _stage_outputs(out)
    try:
        hrun = rn.run_hybrid(docs, cfg, args.accuracy, backend,
                             seed=args.run_seed, rules=rules)
        _emit_run_reports(stage, [hrun.strategy_run], not args.no_figures)
        cascade_txt = rp.render_cascade_table(hrun.stages)
        expected = percent(hrun.expected_cumulative)
        cascade_txt += (f"\nexpected cumulative at accuracy "
                        f"{args.accuracy}: {expected}%\n")
        (stage / "cascade.txt").write_text(cascade_txt, encoding="utf-8")
        with open(stage / "cascade.json", "w", encoding="utf-8") as fh:
            json.dump({
                "accuracy": args.accuracy,
                "expected_cumulative": expected,
                "stages": [{
                    "stage": s.stage, "method": s.method,
                    "remaining": float(s.remaining),
                    "stage_reduction": percent(s.stage_reduction),
                    "cumulative": percent(s.cumulative),
                } for s in hrun.stages],
            }, fh, sort_keys=True, indent=1)
            fh.write("\n")
        if not args.no_figures:
            rp.figure_cascade(hrun.stages, stage / "figures" / "cascade.png")
    except Exception:
        shutil.rmtree(stage, ignore_errors=True)
        raise
    _commit(stage, out)
    final = hrun.stages[-1]
    print(f"hybrid {cfg.label()} at accuracy {args.accuracy}: cumulative "
          f"{percent(final.cumulative)}% (expected {percent(hrun.expected_cumulative)}%)"
          f" -> {out}")
    return 0


def cmd_export_masks(args) -> int:
    docs = _load_docs(args)
    cfg = _strategy(args)
    out = _output_dir(args)
    stage = _stage_outputs(out)
    try:
        count = rn.export_corpus_masks(docs, cfg, stage / "masks.jsonl")
    except Exception:
        shutil.rmtree(stage, ignore_errors=True)
        raise
    _commit(stage, out)
    print(f"exported {count} mask records for {len(docs)} documents -> {out}")
    return 0


_COMMANDS = {
    "generate": cmd_generate,
    "run": cmd_run,
    "sweep": cmd_sweep,
    "hybrid": cmd_hybrid,
    "export-masks": cmd_export_masks,
}


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        _apply_config_file(args)
        return _COMMANDS[args.command](args)
    except (CliError, ConfigurationError, UnknownTemplateError,
            st.UnknownPresetError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
