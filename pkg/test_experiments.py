import asyncio

import pytest

from ontonorm.core.exceptions import EvaluationException, UsageException
from ontonorm.models.evaluation import GoldRecord
from ontonorm.models.llm import MockPolicy
from ontonorm.models.normalization import NormalizationMode, RunConfig
from ontonorm.services.experiments import report_disagreements, run_k_sweep, validate_ks
from ontonorm.services.judges import EquivalenceAssessor
from ontonorm.services.mock_llm import MockChatClient
from ontonorm.services.pipeline import Normalizer
from ontonorm.services.reports import write_disagreements

TERMS = ["Ataxic gait", "Dysarthric speech", "legs and arms"]
GOLD = [
    GoldRecord(term="Ataxic gait", gold_id="HP:0002066"),
    GoldRecord(term="Dysarthric speech", gold_id="HP:0001260"),
    GoldRecord(term="legs and arms", malformed=True),
]


def _config(provider, chat, mode=NormalizationMode.RAG) -> RunConfig:
    return RunConfig(
        mode=mode,
        embedding_provider=provider.identifier,
        chat_backend=chat.identifier if mode != NormalizationMode.EMBED else None,
        model="test-model" if mode != NormalizationMode.EMBED else None,
        fast_path=False,
    )


def _sweep(index, provider, chat, ks, out=None):
    return asyncio.run(
        run_k_sweep(TERMS, GOLD, _config(provider, chat), ks, index, provider, chat, EquivalenceAssessor(0.90), out)
    )


@pytest.mark.parametrize("ks", [[], [0, 5], [5, 51], [5, 1], [3, 3]])
def test_validate_ks(ks):
    with pytest.raises(UsageException):
        validate_ks(ks)


def test_validate_ks_accepts_ascending():
    assert validate_ks((1, 5, 10, 50)) == [1, 5, 10, 50]


def test_sweep_finds_the_exact_synonym_once_it_is_offered(gait_index, gait_provider, tmp_path):
    chat = MockChatClient(MockPolicy.EXACT_SURFACE_ELSE_HIGHEST_COSINE)
    out = tmp_path / "sweep.csv"
    points = _sweep(gait_index, gait_provider, chat, [1, 2, 3, 5], out)

    assert [(p.k, p.accuracy) for p in points] == [(1, 0.5), (2, 0.5), (3, 1.0), (5, 1.0)]
    assert all(p.counts.n_excluded == 1 for p in points)
    assert out.read_text(encoding="utf-8").splitlines() == [
        "k,accuracy,tp,fp,fn",
        "1,0.5,1,1,0",
        "2,0.5,1,1,0",
        "3,1.0,2,0,0",
        "5,1.0,2,0,0",
    ]


def test_sweep_with_highest_cosine_matches_embedding_accuracy(gait_index, gait_provider):
    chat = MockChatClient(MockPolicy.HIGHEST_COSINE)
    points = _sweep(gait_index, gait_provider, chat, [1, 3, 5])

    assert [p.accuracy for p in points] == [0.5, 0.5, 0.5]


def test_sweep_embeds_each_query_once(gait_index, gait_provider):
    chat = MockChatClient(MockPolicy.HIGHEST_COSINE)
    _sweep(gait_index, gait_provider, chat, [1, 2, 3])
    queried = gait_provider.calls

    _sweep(gait_index, gait_provider, chat, [1])
    assert gait_provider.calls - queried == queried


def test_sweep_needs_aligned_gold(gait_index, gait_provider):
    chat = MockChatClient(MockPolicy.HIGHEST_COSINE)
    with pytest.raises(EvaluationException):
        asyncio.run(
            run_k_sweep(
                TERMS[:2], GOLD, _config(gait_provider, chat), [1], gait_index, gait_provider, chat, EquivalenceAssessor()
            )
        )


def _both_runs(index, provider, chat):
    embed_config = _config(provider, chat, NormalizationMode.EMBED)
    embed = asyncio.run(Normalizer(embed_config, index, provider).run_batch(TERMS))
    rag = asyncio.run(Normalizer(_config(provider, chat), index, provider, chat).run_batch(TERMS))
    return rag.results, embed.results


def test_disagreements_list_choices_away_from_the_argmax(gait_index, gait_provider, tmp_path):
    chat = MockChatClient(MockPolicy.FIXED_TABLE, {"Ataxic gait": '{"best_match": "Ataxia", "hpo_id": "HP:0001251"}'})
    rag, embed = _both_runs(gait_index, gait_provider, chat)
    rows = report_disagreements(rag, embed, GOLD)

    assert len(rows) == 1
    row = rows[0]
    assert (row.term, row.argmax_id, row.chosen_id, row.gold_id) == ("Ataxic gait", "HP:0001288", "HP:0001251", "HP:0002066")
    assert row.delta == pytest.approx(0.01, abs=1e-6)

    out = tmp_path / "disagreements.csv"
    write_disagreements(rows, out)
    lines = out.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 2
    assert lines[1].startswith("Ataxic gait,Gait disturbance,HP:0001288,0.9900,Ataxia,HP:0001251,0.9800,0.0100,")


def test_no_disagreements_under_highest_cosine(gait_index, gait_provider):
    rag, embed = _both_runs(gait_index, gait_provider, MockChatClient(MockPolicy.HIGHEST_COSINE))
    assert report_disagreements(rag, embed) == []


def test_disagreements_need_the_same_terms(gait_index, gait_provider):
    rag, embed = _both_runs(gait_index, gait_provider, MockChatClient(MockPolicy.HIGHEST_COSINE))
    with pytest.raises(EvaluationException):
        report_disagreements(rag[:2], embed)
