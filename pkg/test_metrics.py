import json

import pytest

from ontonorm.core.exceptions import EvaluationException
from ontonorm.models.evaluation import ConfusionCounts, EquivalenceVerdict, GoldRecord, Outcome, TierUsed
from ontonorm.models.normalization import NormalizationMode, NormalizationResult, ResultFlag
from ontonorm.services.evaluation import (
    classify,
    compute_metrics,
    count_exact_matches,
    read_gold_file,
    round_half_up,
    score_results,
)
from ontonorm.services.reports import render_metrics_table, write_metrics_json

YES = EquivalenceVerdict.combine(cosine_score=0.95)
NO = EquivalenceVerdict.combine(cosine_score=0.42)


def _result(term="hyporeflexia", chosen_id="HP:0001265", index=0, **fields) -> NormalizationResult:
    if ResultFlag.NO_OUTPUT in fields.get("flags", []) or fields.get("error"):
        chosen_id = None
    surface = "Hyporeflexia" if chosen_id else None
    return NormalizationResult(
        index=index,
        input=term,
        mode=NormalizationMode.RAG,
        chosen_surface=surface,
        chosen_id=chosen_id,
        config_hash="0" * 16,
        **fields,
    )


GOLD = GoldRecord(term="hyporeflexia", gold_id="HP:0001265")


@pytest.mark.parametrize(
    "result, gold, verdict, expected",
    [
        (_result(), GOLD, YES, Outcome.TP),
        (_result(), GOLD, NO, Outcome.FP),
        (_result(), GOLD, None, Outcome.FP),
        (_result(chosen_id="HP:0001284"), GOLD, YES, Outcome.FP),
        (_result(flags=[ResultFlag.NO_OUTPUT]), GOLD, None, Outcome.FN),
        (_result(chosen_id="HP:0001284"), GOLD, NO, Outcome.FP),
        (_result(chosen_id="HP:0001284"), GOLD, None, Outcome.FP),
        (_result(flags=[ResultFlag.NO_OUTPUT, ResultFlag.INVALID_ID]), GOLD, None, Outcome.FN),
        (_result(flags=[ResultFlag.EXACT_MATCH]), GOLD, YES, Outcome.TP),
        (_result(flags=[ResultFlag.OFF_LIST]), GOLD, YES, Outcome.TP),
        (_result(), GoldRecord(term="hyporeflexia", malformed=True), YES, Outcome.EXCLUDED),
        (_result(flags=[ResultFlag.NO_OUTPUT]), GoldRecord(term="hyporeflexia", malformed=True), None, Outcome.EXCLUDED),
    ],
)
def test_classify(result, gold, verdict, expected):
    assert classify(result, gold, verdict) == expected


def test_classify_compares_preprocessed_terms():
    assert classify(_result(term="  hyporeflexia "), GOLD, YES) == Outcome.TP
    with pytest.raises(EvaluationException):
        classify(_result(term="areflexia"), GOLD, YES)


def test_classify_refuses_errored_results():
    with pytest.raises(EvaluationException):
        classify(_result(error="LLMRetriesExhaustedException: gave up"), GOLD)


@pytest.mark.parametrize(
    "counts, expected",
    [
        (ConfusionCounts.of(tp=1250, fp=0, fn=570), {"accuracy": "0.69", "f1": "0.81", "recall": "0.69", "precision": "1.00"}),
        (ConfusionCounts.of(tp=925, fp=895, fn=0), {"accuracy": "0.51", "f1": "0.67", "recall": "1.00", "precision": "0.51"}),
        (ConfusionCounts.of(tp=1, fp=1, fn=2), {"accuracy": "0.25", "f1": "0.40", "recall": "0.33", "precision": "0.50"}),
    ],
)
def test_metric_values(counts, expected):
    report = compute_metrics(counts)

    assert report.rounded == expected
    assert report.f1 == pytest.approx(2 * report.precision * report.recall / (report.precision + report.recall))
    assert not any(report.undefined.values())


def test_zero_over_zero_is_flagged():
    report = compute_metrics(ConfusionCounts.of())

    assert (report.accuracy, report.precision, report.recall, report.f1) == (0.0, 0.0, 0.0, 0.0)
    assert all(report.undefined.values())


def test_recall_undefined_without_positives():
    report = compute_metrics(ConfusionCounts.of(fp=3))
    assert report.undefined == {"accuracy": False, "precision": False, "recall": True, "f1": True}


def test_malformed_terms_as_true_negatives():
    report = compute_metrics(ConfusionCounts.of(tp=2, fn=2, tn=4, n_excluded=4))
    assert report.accuracy == 0.75


@pytest.mark.parametrize("value, expected", [(0.815, "0.82"), (0.125, "0.13"), (0.6868, "0.69"), (1.0, "1.00"), (0.0, "0.00")])
def test_round_half_up(value, expected):
    assert round_half_up(value) == expected


def test_counts_must_add_up():
    with pytest.raises(ValueError):
        ConfusionCounts(tp=1, fp=1, fn=1, n_scored=2)


def test_score_results_tallies_outcomes():
    results = [
        _result(index=0),
        _result(index=1, chosen_id="HP:0001284"),
        _result(index=2, flags=[ResultFlag.NO_OUTPUT]),
        _result(index=3),
    ]
    gold = [GOLD, GOLD, GOLD, GoldRecord(term="hyporeflexia", malformed=True)]
    report = score_results(results, gold, {0: YES, 1: YES})

    assert (report.counts.tp, report.counts.fp, report.counts.fn) == (1, 1, 1)
    assert (report.counts.n_scored, report.counts.n_excluded, report.counts.tn) == (3, 1, 0)
    assert [t.outcome for t in report.terms] == [Outcome.TP, Outcome.FP, Outcome.FN, Outcome.EXCLUDED]

    as_tn = score_results(results, gold, {0: YES}, count_malformed_as_tn=True)
    assert as_tn.counts.tn == 1


def test_score_results_refuses_errors_unless_skipped():
    results = [_result(index=0), _result(index=1, error="EmbeddingProviderException: timeout")]
    gold = [GOLD, GOLD]

    with pytest.raises(EvaluationException):
        score_results(results, gold, {0: YES})
    report = score_results(results, gold, {0: YES}, skip_errors=True)
    assert (report.counts.n_scored, report.n_errors) == (1, 1)


def test_score_results_needs_aligned_inputs():
    with pytest.raises(EvaluationException):
        score_results([_result()], [GOLD, GOLD], {})


def test_verdict_tiers():
    cosine_only = EquivalenceVerdict.combine(cosine_score=0.90, threshold=0.90)
    judged = EquivalenceVerdict.combine(cosine_score=0.95, llm_verdict=False)
    reviewed = EquivalenceVerdict.combine(cosine_score=0.50, llm_verdict=False, human_verdict=True)
    nothing = EquivalenceVerdict.combine()

    assert (cosine_only.final, cosine_only.tier_used) == (True, TierUsed.COSINE_ONLY)
    assert (judged.final, judged.tier_used, judged.cosine_verdict) == (False, TierUsed.LLM_JUDGE, True)
    assert (reviewed.final, reviewed.tier_used) == (True, TierUsed.HUMAN)
    assert (nothing.final, nothing.cosine_verdict) == (False, None)


def test_verdict_final_must_follow_its_tier():
    with pytest.raises(ValueError):
        EquivalenceVerdict(human_verdict=False, final=True, tier_used=TierUsed.HUMAN)


def test_metrics_table():
    reports = [
        compute_metrics(ConfusionCounts.of(tp=1250, fn=570), method="Embeddings"),
        compute_metrics(ConfusionCounts.of(tp=925, fp=895), method="GPT-4o RAG"),
    ]
    lines = render_metrics_table(reports).splitlines()

    assert lines[0].split() == ["Method", "Accuracy", "F1", "Recall", "Precision", "N"]
    assert set(lines[1].replace(" ", "")) == {"-"}
    assert lines[2].split() == ["Embeddings", "0.69", "0.81", "0.69", "1.00", "1,820"]
    assert lines[3].split()[-5:] == ["0.51", "0.67", "1.00", "0.51", "1,820"]


def test_metrics_json(tmp_path):
    path = tmp_path / "metrics.json"
    write_metrics_json([compute_metrics(ConfusionCounts.of(tp=3, fp=1), method="rag")], path)

    payload = json.loads(path.read_text(encoding="utf-8"))
    assert payload["methods"][0]["method"] == "rag"
    assert payload["methods"][0]["rounded"]["precision"] == "0.75"
    assert payload["methods"][0]["counts"]["n_scored"] == 4


def test_read_gold_file(tmp_path):
    path = tmp_path / "gold.csv"
    path.write_text(
        "term,gold_id,gold_surface,malformed\n"
        "hyporeflexia,HP_0001265,Hyporeflexia,0\n"
        "legs and arms,,,1\n",
        encoding="utf-8",
    )
    gold = read_gold_file(path)

    assert gold[0] == GoldRecord(term="hyporeflexia", gold_id="HP:0001265", gold_surface="Hyporeflexia")
    assert gold[1].malformed and gold[1].gold_id is None


@pytest.mark.parametrize(
    "body",
    [
        "term,gold_id,gold_surface,malformed\nfoot drop,,,0\n",
        "term,gold_id,gold_surface,malformed\nfoot drop,HP:0009027,,maybe\n",
        "term,gold_surface\nfoot drop,Foot drop\n",
    ],
)
def test_bad_gold_files(tmp_path, body):
    path = tmp_path / "gold.csv"
    path.write_text(body, encoding="utf-8")
    with pytest.raises(EvaluationException):
        read_gold_file(path)


def test_count_exact_matches(hpo_index):
    assert count_exact_matches(["Hyporeflexia", " foot drop ", "clumsy walking"], hpo_index) == 2
