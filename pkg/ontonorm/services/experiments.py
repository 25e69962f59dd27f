"""
Experiments over normalization runs: candidate-pool sweep and disagreement report
"""

import logging
from pathlib import Path
from typing import List, Optional, Sequence

from ontonorm.core.config import MAX_CANDIDATES
from ontonorm.core.exceptions import EvaluationException, UsageException
from ontonorm.models.evaluation import DisagreementRow, GoldRecord, SweepPoint
from ontonorm.models.normalization import NormalizationMode, NormalizationResult, RunConfig
from ontonorm.services.evaluation import compute_metrics, score_results
from ontonorm.services.judges import EquivalenceAssessor
from ontonorm.services.llm_client import ChatBackend
from ontonorm.services.pipeline import Normalizer, QueryVectorCache, preprocess_term
from ontonorm.services.providers import EmbeddingProvider
from ontonorm.services.reports import write_sweep_csv
from ontonorm.services.retriever import TermIndex

logger = logging.getLogger(__name__)


def validate_ks(ks: Sequence[int]) -> List[int]:
    ks = list(ks)
    if not ks:
        raise UsageException("The sweep needs at least one k")
    if any(k < 1 or k > MAX_CANDIDATES for k in ks):
        raise UsageException(f"Sweep values must lie in 1..{MAX_CANDIDATES}", {"ks": ks})
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise UsageException("Sweep values must be strictly ascending", {"ks": ks})
    return ks


async def run_k_sweep(
    terms: Sequence[str],
    gold: Sequence[GoldRecord],
    config: RunConfig,
    ks: Sequence[int],
    index: TermIndex,
    provider: EmbeddingProvider,
    chat: ChatBackend,
    assessor: EquivalenceAssessor,
    out: Optional[Path] = None,
    count_malformed_as_tn: bool = False,
) -> List[SweepPoint]:
    """
    One full RAG batch plus scoring per k

    Query vectors are embedded once and shared by every k.

    Args:
        terms: Input terms
        gold: Gold records aligned with terms
        config: Base run configuration; mode and k are overridden
        ks: Pool sizes, ascending, each in 1..50
        out: Optional CSV k,accuracy,tp,fp,fn

    Returns:
        One point per k
    """
    ks = validate_ks(ks)
    if len(terms) != len(gold):
        raise EvaluationException(f"{len(terms)} terms for {len(gold)} gold records")
    cache = QueryVectorCache()
    points: List[SweepPoint] = []
    for k in ks:
        run_config = config.model_copy(update={"mode": NormalizationMode.RAG, "k": k})
        normalizer = Normalizer(run_config, index, provider, chat, cache=cache)
        outcome = await normalizer.run_batch(terms)
        verdicts = await assessor.assess_all(outcome.results, gold)
        report = score_results(outcome.results, gold, verdicts, count_malformed_as_tn)
        metrics = compute_metrics(report.counts, method=f"k={k}")
        points.append(SweepPoint(k=k, accuracy=metrics.accuracy, counts=report.counts))
        logger.info(f"k={k}: accuracy {metrics.rounded['accuracy']} ({report.counts.tp} TP)")

    if out is not None:
        write_sweep_csv(points, out)
    return points


def report_disagreements(
    results_rag: Sequence[NormalizationResult],
    results_embed: Sequence[NormalizationResult],
    gold: Optional[Sequence[GoldRecord]] = None,
) -> List[DisagreementRow]:
    """
    Terms where the RAG choice is not the cosine-argmax choice

    delta is the argmax cosine minus the cosine of the RAG choice.

    Raises:
        EvaluationException: The two runs cover different terms
    """
    rag_terms = [preprocess_term(r.input) for r in results_rag]
    embed_terms = [preprocess_term(r.input) for r in results_embed]
    if rag_terms != embed_terms:
        raise EvaluationException(
            "RAG and embedding results cover different terms",
            {"rag": len(rag_terms), "embed": len(embed_terms)},
        )
    if gold is not None and len(gold) != len(rag_terms):
        raise EvaluationException(f"{len(rag_terms)} results for {len(gold)} gold records")

    rows: List[DisagreementRow] = []
    for position, (rag, embed) in enumerate(zip(results_rag, results_embed)):
        if rag.chosen_id is None or embed.chosen_id is None or rag.chosen_id == embed.chosen_id:
            continue
        chosen_cosine = rag.cosine_of_choice
        rows.append(
            DisagreementRow(
                term=rag.input,
                argmax_surface=embed.chosen_surface,
                argmax_id=embed.chosen_id,
                argmax_cosine=embed.cosine_of_choice,
                chosen_surface=rag.chosen_surface,
                chosen_id=rag.chosen_id,
                chosen_cosine=chosen_cosine,
                delta=None if chosen_cosine is None else embed.cosine_of_choice - chosen_cosine,
                gold_id=gold[position].gold_id if gold is not None else None,
            )
        )
    logger.info(f"{len(rows)} of {len(rag_terms)} RAG choices differ from the cosine argmax")
    return rows
