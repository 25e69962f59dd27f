"""
Live checks against real endpoints and the pinned HPO release

Skipped unless the environment provides the credentials and data:
  ONTONORM_HPO_RELEASE_CSV   BioPortal HP CSV of the pinned release
  ONTONORM_LLM_TOKEN         chat endpoint token
  ONTONORM_EMBED_URL         embedding endpoint for query vectors
  ONTONORM_LIVE_INDEX        index directory written by build-index
  ONTONORM_LIVE_GOLD         gold CSV; the first 25 rows are used
"""

import asyncio
import os
from pathlib import Path

import pytest

from ontonorm.cli.commands.common import INDEX_EMBEDDINGS, INDEX_ENTRIES
from ontonorm.core.config import load_settings
from ontonorm.models.normalization import NormalizationMode, RunConfig
from ontonorm.services.embed_store import load_embedding_file
from ontonorm.services.evaluation import compute_metrics, read_gold_file, score_results
from ontonorm.services.judges import EquivalenceAssessor
from ontonorm.services.llm_client import ChatClient
from ontonorm.services.ontology import (
    RELEASE_ENTRY_COUNT,
    RELEASE_LABEL_COUNT,
    check_release_counts,
    load_entry_table,
    read_entry_table,
)
from ontonorm.services.pipeline import Normalizer
from ontonorm.services.providers import HttpEmbeddingProvider
from ontonorm.services.retriever import build_index

LIVE_TERMS = 25


@pytest.mark.skipif(not os.environ.get("ONTONORM_HPO_RELEASE_CSV"), reason="ONTONORM_HPO_RELEASE_CSV not set")
def test_pinned_release_counts():
    table = load_entry_table(Path(os.environ["ONTONORM_HPO_RELEASE_CSV"]))

    assert table.label_count == RELEASE_LABEL_COUNT
    assert len(table) == RELEASE_ENTRY_COUNT
    assert check_release_counts(table)


@pytest.mark.skipif(
    not all(os.environ.get(name) for name in ("ONTONORM_LLM_TOKEN", "ONTONORM_EMBED_URL", "ONTONORM_LIVE_INDEX", "ONTONORM_LIVE_GOLD")),
    reason="live chat, embedding and gold data not configured",
)
def test_rag_is_not_worse_than_plain_prompt():
    settings = load_settings()
    index_dir = Path(os.environ["ONTONORM_LIVE_INDEX"])
    table = read_entry_table(index_dir / INDEX_ENTRIES)
    index = build_index(table, load_embedding_file(index_dir / INDEX_EMBEDDINGS, table))
    gold = read_gold_file(Path(os.environ["ONTONORM_LIVE_GOLD"]))[:LIVE_TERMS]
    terms = [record.term for record in gold]

    provider = HttpEmbeddingProvider(
        url=settings.embed_url,
        model=settings.embed_model,
        token=settings.embed_token.get_secret_value() if settings.embed_token else None,
    )
    chat = ChatClient.from_settings(settings)
    assessor = EquivalenceAssessor(threshold=settings.cosine_threshold, provider=provider)

    def accuracy(mode: NormalizationMode) -> float:
        config = RunConfig.from_settings(
            settings,
            mode,
            embedding_provider=provider.identifier,
            chat_backend=chat.identifier,
        ).model_copy(update={"fast_path": False})
        outcome = asyncio.run(Normalizer(config, index, provider, chat).run_batch(terms))
        verdicts = asyncio.run(assessor.assess_all(outcome.results, gold))
        report = score_results(outcome.results, gold, verdicts, skip_errors=True)
        return compute_metrics(report.counts).accuracy

    assert accuracy(NormalizationMode.RAG) >= accuracy(NormalizationMode.LLM)
