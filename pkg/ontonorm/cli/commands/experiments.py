"""
sweep and report: candidate-pool sweep and cross-method reports
"""

import argparse
import asyncio
import json
import logging
from pathlib import Path

from ontonorm.cli.commands.common import (
    add_index_flags,
    add_llm_flags,
    k_list,
    load_index,
    make_chat,
    make_provider,
    require,
)
from ontonorm.cli.commands.evaluate import add_judge_flags
from ontonorm.core.config import Settings
from ontonorm.core.exceptions import EvaluationException, UsageException
from ontonorm.core.files import read_terms_file
from ontonorm.models.evaluation import MetricsReport
from ontonorm.models.normalization import NormalizationMode, RunConfig
from ontonorm.services.evaluation import read_gold_file
from ontonorm.services.experiments import report_disagreements, run_k_sweep
from ontonorm.services.judges import EquivalenceAssessor
from ontonorm.services.pipeline import read_results
from ontonorm.services.reports import render_metrics_table, write_disagreements

logger = logging.getLogger(__name__)

DEFAULT_KS = "1,2,3,4,5,10,15,20,25,30,35,40,45,50"


def register(subparsers) -> None:
    sweep = subparsers.add_parser(
        "sweep",
        help="Accuracy of the RAG method across candidate-pool sizes",
        description="Run one RAG batch per k, score each against gold and write k,accuracy,tp,fp,fn.",
    )
    sweep.add_argument("--terms", type=Path, help="Terms file")
    sweep.add_argument("--gold", type=Path, help="Gold CSV aligned with the terms file")
    sweep.add_argument("--ks", type=k_list, default=k_list(DEFAULT_KS), help=f"Ascending k values (default {DEFAULT_KS})")
    sweep.add_argument("--out", type=Path, help="Sweep CSV")
    sweep.add_argument(
        "--paper-faithful",
        action="store_true",
        help="Disable production-only behavior such as the exact-match fast path",
    )
    add_index_flags(sweep)
    add_judge_flags(sweep, query_embeddings=False)
    add_llm_flags(sweep)
    sweep.set_defaults(handler=run_sweep)

    report = subparsers.add_parser(
        "report",
        help="Disagreement table and combined metrics table",
        description="With --rag and --embed, list terms where the RAG choice is not the cosine argmax. "
        "With --metrics, print one table row per metrics JSON file.",
    )
    report.add_argument("--rag", type=Path, help="RAG results file")
    report.add_argument("--embed", type=Path, help="Embed-only results file for the same terms")
    report.add_argument("--gold", type=Path, help="Optional gold CSV adding the gold ID column")
    report.add_argument("--metrics", type=Path, nargs="+", help="Metrics JSON files written by evaluate")
    report.add_argument("--out", type=Path, help="Disagreement CSV")
    report.set_defaults(handler=run_report)


def run_sweep(args: argparse.Namespace, settings: Settings) -> int:
    require(args, "terms", "gold", "out")
    terms = read_terms_file(args.terms)
    gold = read_gold_file(args.gold)
    index = load_index(args, settings)
    provider = make_provider(args, settings)
    chat = make_chat(args, settings)
    config = RunConfig.from_settings(
        settings,
        NormalizationMode.RAG,
        embedding_provider=provider.identifier,
        chat_backend=chat.identifier,
    )
    assessor = EquivalenceAssessor(
        threshold=settings.cosine_threshold,
        provider=provider,
        judge=chat if args.judge else None,
        judge_model=settings.model,
        concurrency=settings.concurrency,
    )
    points = asyncio.run(
        run_k_sweep(
            terms, gold, config, args.ks, index, provider, chat, assessor,
            out=args.out, count_malformed_as_tn=settings.count_malformed_as_tn,
        )
    )
    best = max(points, key=lambda p: p.accuracy)
    logger.info(f"Best accuracy {best.accuracy:.4f} at k={best.k}")
    return 0


def run_report(args: argparse.Namespace, settings: Settings) -> int:
    if args.metrics is None and (args.rag is None or args.embed is None):
        raise UsageException("report needs --rag with --embed, or --metrics")

    if args.metrics:
        reports = []
        for path in args.metrics:
            try:
                payload = json.loads(Path(path).read_text(encoding="utf-8"))
                reports.extend(MetricsReport.model_validate(item) for item in payload["methods"])
            except (OSError, ValueError, KeyError, TypeError) as e:
                raise EvaluationException(f"Cannot read metrics file {path}: {str(e)}")
        print(render_metrics_table(reports), end="")

    if args.rag is not None and args.embed is not None:
        require(args, "out")
        gold = read_gold_file(args.gold) if args.gold else None
        rows = report_disagreements(read_results(args.rag), read_results(args.embed), gold)
        write_disagreements(rows, args.out)
    return 0
