"""
Expert review sheets: export pending pairs, import filled verdicts
"""

import csv
import json
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from pydantic import BaseModel

from ontonorm.core.exceptions import ReviewSheetException
from ontonorm.core.files import atomic_write, write_json
from ontonorm.models.evaluation import EquivalenceVerdict
from ontonorm.models.normalization import NormalizationResult

logger = logging.getLogger(__name__)

SHEET_HEADER = ("term", "candidate", "cosine", "llm_verdict", "human_verdict")

_YES = {"yes", "y", "true", "1"}
_NO = {"no", "n", "false", "0"}


class ReviewRow(BaseModel):
    """One (term, candidate) pair awaiting expert judgment"""
    term: str
    candidate: str
    cosine: Optional[float] = None
    llm_verdict: Optional[bool] = None
    human_verdict: Optional[bool] = None


def _yes_no(value: Optional[bool]) -> str:
    if value is None:
        return ""
    return "yes" if value else "no"


def pending_rows(
    results: Sequence[NormalizationResult],
    verdicts: Dict[int, EquivalenceVerdict],
) -> List[ReviewRow]:
    """Rows for every judged choice without a human verdict, first occurrence of each pair"""
    rows: List[ReviewRow] = []
    seen = set()
    for result in results:
        verdict = verdicts.get(result.index)
        if verdict is None or verdict.human_verdict is not None:
            continue
        pair = (result.input, result.chosen_surface)
        if pair in seen:
            continue
        seen.add(pair)
        rows.append(
            ReviewRow(
                term=result.input,
                candidate=result.chosen_surface,
                cosine=verdict.cosine_score,
                llm_verdict=verdict.llm_verdict,
            )
        )
    return rows


def export_review_sheet(rows: Iterable[ReviewRow], path: Path) -> int:
    """Write a review sheet with a blank human_verdict column; returns the row count"""
    count = 0
    with atomic_write(Path(path)) as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(SHEET_HEADER)
        for row in rows:
            writer.writerow([
                row.term,
                row.candidate,
                "" if row.cosine is None else f"{row.cosine:.4f}",
                _yes_no(row.llm_verdict),
                _yes_no(row.human_verdict),
            ])
            count += 1
    logger.info(f"Exported {count} review rows to {path}")
    return count


def import_review_sheet(
    path: Path,
    known_pairs: Optional[Iterable[Tuple[str, str]]] = None,
) -> Dict[Tuple[str, str], bool]:
    """
    Read human verdicts from a filled review sheet

    Blank human_verdict cells are skipped.

    Args:
        path: Filled sheet
        known_pairs: When given, every row must name one of these pairs

    Raises:
        ReviewSheetException: Missing columns, unreadable verdicts or unknown pairs
    """
    path = Path(path)
    verdicts: Dict[Tuple[str, str], bool] = {}
    unknown: List[Tuple[str, str]] = []
    known = set(known_pairs) if known_pairs is not None else None
    with path.open("r", encoding="utf-8-sig", newline="") as f:
        reader = csv.DictReader(f)
        missing = [c for c in ("term", "candidate", "human_verdict") if c not in (reader.fieldnames or [])]
        if missing:
            raise ReviewSheetException(f"{path}: review sheet lacks column(s) {missing}")
        for row_number, row in enumerate(reader, start=2):
            pair = (row["term"], row["candidate"])
            value = (row.get("human_verdict") or "").strip().lower()
            if known is not None and pair not in known:
                unknown.append(pair)
                continue
            if not value:
                continue
            if value in _YES:
                verdicts[pair] = True
            elif value in _NO:
                verdicts[pair] = False
            else:
                raise ReviewSheetException(
                    f"{path}: row {row_number}: human_verdict must be yes or no, got {value!r}",
                    {"row": row_number},
                )
    if unknown:
        listed = "; ".join(f"{term} -> {candidate}" for term, candidate in unknown)
        raise ReviewSheetException(f"{path}: {len(unknown)} unknown pair(s): {listed}", {"pairs": unknown})
    logger.info(f"Imported {len(verdicts)} human verdicts from {path}")
    return verdicts


def write_human_verdicts(verdicts: Dict[Tuple[str, str], bool], path: Path) -> None:
    """Store imported verdicts as JSON for later evaluate runs"""
    rows = [
        {"term": term, "candidate": candidate, "human_verdict": value}
        for (term, candidate), value in sorted(verdicts.items())
    ]
    write_json(Path(path), {"verdicts": rows})


def load_human_verdicts(
    path: Path,
    known_pairs: Optional[Iterable[Tuple[str, str]]] = None,
) -> Dict[Tuple[str, str], bool]:
    """Human verdicts from a filled sheet (.csv) or an imported verdict file (.json)"""
    path = Path(path)
    if path.suffix.lower() != ".json":
        return import_review_sheet(path, known_pairs)
    try:
        rows = json.loads(path.read_text(encoding="utf-8"))["verdicts"]
        verdicts = {(row["term"], row["candidate"]): bool(row["human_verdict"]) for row in rows}
    except (OSError, ValueError, KeyError, TypeError) as e:
        raise ReviewSheetException(f"Cannot read verdict file {path}: {str(e)}")
    if known_pairs is not None:
        unknown = sorted(set(verdicts) - set(known_pairs))
        if unknown:
            raise ReviewSheetException(f"{path}: {len(unknown)} unknown pair(s)", {"pairs": unknown})
    return verdicts
