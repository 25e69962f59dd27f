"""
Scoring against a gold standard and metric computation
"""

import csv
import logging
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from pydantic import ValidationError

from ontonorm.core.exceptions import EvaluationException
from ontonorm.models.evaluation import (
    ConfusionCounts,
    EquivalenceVerdict,
    GoldRecord,
    MetricsReport,
    Outcome,
    ScoredTerm,
    ScoreReport,
)
from ontonorm.models.normalization import NormalizationResult
from ontonorm.services.pipeline import preprocess_term
from ontonorm.services.retriever import TermIndex

logger = logging.getLogger(__name__)

GOLD_HEADER = ("term", "gold_id", "gold_surface", "malformed")
_TRUE = {"1", "true", "yes", "y"}
_FALSE = {"0", "false", "no", "n", ""}


def read_gold_file(path: Path) -> List[GoldRecord]:
    """
    Read a gold CSV: term,gold_id,gold_surface,malformed (malformed 0/1)

    Raises:
        EvaluationException: Missing columns or an invalid row
    """
    path = Path(path)
    records: List[GoldRecord] = []
    with path.open("r", encoding="utf-8-sig", newline="") as f:
        reader = csv.DictReader(f)
        missing = [c for c in ("term", "gold_id") if c not in (reader.fieldnames or [])]
        if missing:
            raise EvaluationException(f"{path}: gold file lacks column(s) {missing}")
        for row_number, row in enumerate(reader, start=2):
            flag = (row.get("malformed") or "").strip().lower()
            if flag not in _TRUE and flag not in _FALSE:
                raise EvaluationException(f"{path}: row {row_number}: malformed must be 0 or 1, got {flag!r}")
            try:
                records.append(
                    GoldRecord(
                        term=(row.get("term") or "").strip(),
                        gold_id=(row.get("gold_id") or "").strip() or None,
                        gold_surface=(row.get("gold_surface") or "").strip() or None,
                        malformed=flag in _TRUE,
                    )
                )
            except ValidationError as e:
                raise EvaluationException(f"{path}: row {row_number}: {e.errors()[0]['msg']}", {"row": row_number})
    logger.info(f"Loaded {len(records)} gold records from {path}")
    return records


def _same_term(a: str, b: str) -> bool:
    return preprocess_term(a) == preprocess_term(b)


def classify(
    result: NormalizationResult,
    gold: GoldRecord,
    verdict: Optional[EquivalenceVerdict] = None,
) -> Outcome:
    """
    Confusion class of one result

    Malformed gold terms are Excluded, no output is FN, a correct ID judged
    equivalent is TP and anything else is FP.

    Raises:
        EvaluationException: Result and gold are for different terms, or the
            result carries an infrastructure error
    """
    if not _same_term(result.input, gold.term):
        raise EvaluationException(
            f"Result term {result.input!r} does not match gold term {gold.term!r}",
            {"result": result.input, "gold": gold.term},
        )
    if gold.malformed:
        return Outcome.EXCLUDED
    if result.error is not None:
        raise EvaluationException(f"Result for {result.input!r} failed and cannot be scored: {result.error}")
    if result.no_output:
        return Outcome.FN
    if verdict is not None and verdict.final and result.chosen_id == gold.gold_id:
        return Outcome.TP
    return Outcome.FP


def check_alignment(results: Sequence[NormalizationResult], gold: Sequence[GoldRecord]) -> None:
    if len(results) != len(gold):
        raise EvaluationException(
            f"{len(results)} results for {len(gold)} gold records",
            {"results": len(results), "gold": len(gold)},
        )


def score_results(
    results: Sequence[NormalizationResult],
    gold: Sequence[GoldRecord],
    verdicts: Dict[int, EquivalenceVerdict],
    count_malformed_as_tn: bool = False,
    skip_errors: bool = False,
) -> ScoreReport:
    """
    Classify every result against the gold record at the same position

    Args:
        results: Results in input order
        gold: Gold records in the same order
        verdicts: Equivalence verdicts keyed by result index
        count_malformed_as_tn: Count excluded malformed terms as TN
        skip_errors: Leave errored results out instead of refusing to score

    Returns:
        Counts and per-term outcomes
    """
    check_alignment(results, gold)
    errored = [r.index for r in results if r.error is not None]
    if errored and not skip_errors:
        raise EvaluationException(
            f"{len(errored)} result(s) failed during the run; rerun with --resume before scoring",
            {"indices": errored[:20]},
        )

    tally = {outcome: 0 for outcome in Outcome}
    scored: List[ScoredTerm] = []
    for result, record in zip(results, gold):
        if result.error is not None and not record.malformed:
            continue
        verdict = verdicts.get(result.index)
        outcome = classify(result, record, verdict)
        tally[outcome] += 1
        scored.append(
            ScoredTerm(
                index=result.index,
                term=result.input,
                outcome=outcome,
                chosen_surface=result.chosen_surface,
                chosen_id=result.chosen_id,
                gold_id=record.gold_id,
                verdict=verdict,
            )
        )

    counts = ConfusionCounts.of(
        tp=tally[Outcome.TP],
        fp=tally[Outcome.FP],
        fn=tally[Outcome.FN],
        tn=tally[Outcome.EXCLUDED] if count_malformed_as_tn else 0,
        n_excluded=tally[Outcome.EXCLUDED],
    )
    return ScoreReport(counts=counts, terms=scored, n_errors=len(errored))


def round_half_up(value: float, places: int = 2) -> str:
    """Decimal rounding as printed in reports: 0.815 -> "0.82" """
    quantum = Decimal(1).scaleb(-places)
    return str(Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP))


def _ratio(numerator: int, denominator: int):
    if denominator == 0:
        return 0.0, True
    return numerator / denominator, False


def compute_metrics(counts: ConfusionCounts, method: str = "") -> MetricsReport:
    """
    Accuracy, precision, recall and F1 from confusion counts

    0/0 is reported as 0.0 and flagged undefined.
    """
    tp, fp, fn, tn = counts.tp, counts.fp, counts.fn, counts.tn
    accuracy, acc_undef = _ratio(tp + tn, tp + tn + fp + fn)
    precision, prec_undef = _ratio(tp, tp + fp)
    recall, rec_undef = _ratio(tp, tp + fn)
    if precision + recall > 0:
        f1, f1_undef = 2 * precision * recall / (precision + recall), False
    else:
        f1, f1_undef = 0.0, True

    values = {"accuracy": accuracy, "precision": precision, "recall": recall, "f1": f1}
    return MetricsReport(
        method=method,
        counts=counts,
        rounded={name: round_half_up(value) for name, value in values.items()},
        undefined={"accuracy": acc_undef, "precision": prec_undef, "recall": rec_undef, "f1": f1_undef},
        **values,
    )


def count_exact_matches(terms: Sequence[str], index: TermIndex) -> int:
    """Inputs whose case-folded text equals some entry surface"""
    hits = sum(1 for term in terms if index.exact_match(preprocess_term(term)) is not None)
    logger.info(f"{hits} of {len(terms)} terms have an exact entry-term match")
    return hits
