"""
evaluate, judge-export, judge-import: scoring a results file against gold
"""

import argparse
import asyncio
import logging
from pathlib import Path
from typing import List, Sequence, Set, Tuple

from ontonorm.cli.commands.common import add_llm_flags, make_chat, make_provider, require, threshold_value
from ontonorm.core.config import Settings
from ontonorm.models.evaluation import GoldRecord
from ontonorm.models.normalization import NormalizationResult
from ontonorm.services.evaluation import check_alignment, compute_metrics, read_gold_file, score_results
from ontonorm.services.judges import EquivalenceAssessor
from ontonorm.services.pipeline import read_results
from ontonorm.services.reports import render_metrics_table, write_metrics_json
from ontonorm.services.review_sheet import (
    export_review_sheet,
    import_review_sheet,
    load_human_verdicts,
    pending_rows,
    write_human_verdicts,
)

logger = logging.getLogger(__name__)


def add_judge_flags(parser: argparse.ArgumentParser, query_embeddings: bool = True) -> None:
    group = parser.add_argument_group("equivalence")
    group.add_argument("--threshold", type=threshold_value, help="Cosine equivalence threshold (default 0.90)")
    group.add_argument("--judge", action="store_true", help="Add the LLM judge tier")
    if query_embeddings:
        group.add_argument(
            "--query-embeddings",
            type=Path,
            help="Replay file for the cosine tier when results carry no cosine",
        )


def register(subparsers) -> None:
    evaluate = subparsers.add_parser(
        "evaluate",
        help="Score a results file against a gold standard",
        description="Classify results as TP/FP/FN, print the metrics table and write a JSON report.",
    )
    evaluate.add_argument("--results", type=Path, help="Results file from normalize")
    evaluate.add_argument("--gold", type=Path, help="Gold CSV term,gold_id,gold_surface,malformed")
    evaluate.add_argument("--verdicts", type=Path, help="Filled review sheet (.csv) or imported verdicts (.json)")
    evaluate.add_argument("--label", help="Method name shown in the table")
    evaluate.add_argument("--out", type=Path, help="Metrics JSON file")
    add_judge_flags(evaluate)
    add_llm_flags(evaluate)
    evaluate.set_defaults(handler=run_evaluate)

    export = subparsers.add_parser(
        "judge-export",
        help="Export choices awaiting expert review",
        description="Write a review sheet term,candidate,cosine,llm_verdict,human_verdict for every choice "
        "that carries the gold ID.",
    )
    export.add_argument("--results", type=Path, help="Results file from normalize")
    export.add_argument("--gold", type=Path, help="Gold CSV")
    export.add_argument("--out", type=Path, help="Review sheet to write")
    add_judge_flags(export)
    add_llm_flags(export)
    export.set_defaults(handler=run_judge_export)

    imp = subparsers.add_parser(
        "judge-import",
        help="Import a filled review sheet",
        description="Check a filled review sheet against a results file and store the human verdicts as JSON.",
    )
    imp.add_argument("--verdicts", type=Path, help="Filled review sheet")
    imp.add_argument("--results", type=Path, help="Results file the sheet was exported from")
    imp.add_argument("--out", type=Path, help="Verdict JSON file")
    imp.set_defaults(handler=run_judge_import)


def _pairs(results: Sequence[NormalizationResult]) -> Set[Tuple[str, str]]:
    return {(r.input, r.chosen_surface) for r in results if r.chosen_surface}


def build_assessor(args: argparse.Namespace, settings: Settings, human=None) -> EquivalenceAssessor:
    provider = make_provider(args, settings) if args.query_embeddings is not None or settings.embed_url else None
    return EquivalenceAssessor(
        threshold=settings.cosine_threshold,
        provider=provider,
        judge=make_chat(args, settings) if args.judge else None,
        judge_model=settings.model,
        human=human,
        concurrency=settings.concurrency,
    )


def _load(args: argparse.Namespace) -> Tuple[List[NormalizationResult], List[GoldRecord]]:
    results = read_results(args.results)
    gold = read_gold_file(args.gold)
    check_alignment(results, gold)
    return results, gold


def run_evaluate(args: argparse.Namespace, settings: Settings) -> int:
    require(args, "results", "gold")
    results, gold = _load(args)
    human = load_human_verdicts(args.verdicts, _pairs(results)) if args.verdicts else None
    assessor = build_assessor(args, settings, human)
    verdicts = asyncio.run(assessor.assess_all(results, gold))
    report = score_results(results, gold, verdicts, settings.count_malformed_as_tn)
    metrics = compute_metrics(report.counts, method=args.label or Path(args.results).stem)

    print(render_metrics_table([metrics]), end="")
    if args.out is not None:
        write_metrics_json([metrics], args.out)
    return 0


def run_judge_export(args: argparse.Namespace, settings: Settings) -> int:
    require(args, "results", "gold", "out")
    results, gold = _load(args)
    assessor = build_assessor(args, settings)
    verdicts = asyncio.run(assessor.assess_all(results, gold))
    export_review_sheet(pending_rows(results, verdicts), args.out)
    return 0


def run_judge_import(args: argparse.Namespace, settings: Settings) -> int:
    require(args, "verdicts", "results", "out")
    results = read_results(args.results)
    human = import_review_sheet(args.verdicts, _pairs(results))
    write_human_verdicts(human, args.out)
    return 0
