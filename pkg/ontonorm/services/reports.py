"""
Report writers: metrics table, metrics JSON, sweep CSV, disagreement table
"""

import csv
import logging
from pathlib import Path
from typing import Optional, Sequence

from ontonorm.core.files import atomic_write, write_json
from ontonorm.models.evaluation import DisagreementRow, MetricsReport, SweepPoint

logger = logging.getLogger(__name__)

TABLE_COLUMNS = ("Method", "Accuracy", "F1", "Recall", "Precision", "N")
SWEEP_HEADER = ("k", "accuracy", "tp", "fp", "fn")
DISAGREEMENT_HEADER = (
    "term",
    "argmax_surface",
    "argmax_id",
    "argmax_cosine",
    "chosen_surface",
    "chosen_id",
    "chosen_cosine",
    "delta",
    "gold_id",
)


def render_metrics_table(reports: Sequence[MetricsReport]) -> str:
    """Plain-text table, one row per method, metrics to two decimals"""
    rows = [TABLE_COLUMNS]
    for report in reports:
        rows.append((
            report.method or "-",
            report.rounded["accuracy"],
            report.rounded["f1"],
            report.rounded["recall"],
            report.rounded["precision"],
            f"{report.counts.total:,}",
        ))
    widths = [max(len(row[i]) for row in rows) for i in range(len(TABLE_COLUMNS))]
    lines = []
    for n, row in enumerate(rows):
        cells = [row[0].ljust(widths[0])] + [cell.rjust(widths[i]) for i, cell in enumerate(row) if i > 0]
        lines.append("  ".join(cells).rstrip())
        if n == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def write_metrics_json(reports: Sequence[MetricsReport], path: Path) -> None:
    write_json(Path(path), {"methods": [report.model_dump(mode="json") for report in reports]})
    logger.info(f"Wrote metrics for {len(reports)} method(s) to {path}")


def write_sweep_csv(points: Sequence[SweepPoint], path: Path) -> None:
    """Plot data for accuracy against k"""
    with atomic_write(Path(path)) as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(SWEEP_HEADER)
        for point in points:
            writer.writerow([point.k, repr(point.accuracy), point.counts.tp, point.counts.fp, point.counts.fn])


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.4f}"


def write_disagreements(rows: Sequence[DisagreementRow], path: Path) -> None:
    with atomic_write(Path(path)) as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(DISAGREEMENT_HEADER)
        for row in rows:
            writer.writerow([
                row.term,
                row.argmax_surface,
                row.argmax_id,
                _fmt(row.argmax_cosine),
                row.chosen_surface or "",
                row.chosen_id,
                _fmt(row.chosen_cosine),
                _fmt(row.delta),
                row.gold_id or "",
            ])
    logger.info(f"Wrote {len(rows)} disagreement row(s) to {path}")
