"""
Ontology loading: BioPortal CSV parsing, synonym expansion and the entry-table file
"""

import csv
import io
import logging
from pathlib import Path
from typing import Dict, List, Optional

from pydantic import ValidationError

from ontonorm.core.exceptions import (
    DuplicateConceptException,
    InvalidIdException,
    OntologyParseException,
)
from ontonorm.core.files import atomic_write
from ontonorm.models.ontology import (
    ID_PREFIX,
    ConceptRecord,
    EntryKind,
    EntryTable,
    EntryTerm,
    ParseReport,
    normalize_id,
)

logger = logging.getLogger(__name__)

CLASS_ID_COLUMN = "Class ID"
LABEL_COLUMN = "Preferred Label"
SYNONYMS_COLUMN = "Synonyms"
OBSOLETE_COLUMN = "Obsolete"
REQUIRED_COLUMNS = (CLASS_ID_COLUMN, LABEL_COLUMN, SYNONYMS_COLUMN)

ENTRY_TABLE_HEADER = ("surface", "id", "kind")

# HPO release the published counts were taken from (July 2024)
RELEASE_LABEL_COUNT = 17957
RELEASE_ENTRY_COUNT = 30234


def _class_id_segment(class_id: str) -> str:
    """Trailing path segment of a class IRI"""
    segment = class_id.strip().rstrip("/")
    for sep in ("/", "#"):
        segment = segment.rsplit(sep, 1)[-1]
    return segment


def _is_hp_segment(segment: str) -> bool:
    return segment[:3].upper() in (f"{ID_PREFIX}_", f"{ID_PREFIX}:")


def parse_ontology_report(
    data: bytes,
    synonym_delimiter: str = "|",
    include_obsolete: bool = True,
) -> ParseReport:
    """
    Parse a BioPortal HP CSV export into concept records

    Args:
        data: Raw UTF-8 CSV bytes with a header row
        synonym_delimiter: Separator used inside the Synonyms cell
        include_obsolete: Keep rows whose label starts with "obsolete "

    Returns:
        ParseReport with the concepts in file order and skip counts

    Raises:
        OntologyParseException: On malformed CSV or missing columns
        DuplicateConceptException: When an ID appears on two rows
    """
    try:
        text = data.decode("utf-8-sig")
    except UnicodeDecodeError as e:
        raise OntologyParseException(f"Ontology CSV is not valid UTF-8: {e}", {"row": None})

    reader = csv.reader(io.StringIO(text, newline=""), strict=True)
    try:
        header = next(reader, None)
    except csv.Error as e:
        raise OntologyParseException(f"Malformed CSV header: {e}", {"row": 1})
    if header is None:
        raise OntologyParseException("Ontology CSV is empty", {"row": 1})

    columns = {name.strip(): i for i, name in enumerate(header)}
    missing = [name for name in REQUIRED_COLUMNS if name not in columns]
    if missing:
        raise OntologyParseException(
            f"Ontology CSV is missing required columns: {', '.join(missing)}",
            {"row": 1, "missing": missing},
        )
    obsolete_col = columns.get(OBSOLETE_COLUMN)
    width = max(columns[name] for name in REQUIRED_COLUMNS) + 1

    report = ParseReport(concepts=[])
    seen: Dict[str, int] = {}
    row_number = 1
    while True:
        try:
            row = next(reader)
        except StopIteration:
            break
        except csv.Error as e:
            raise OntologyParseException(
                f"Malformed CSV near line {reader.line_num}: {e}",
                {"row": row_number + 1, "line": reader.line_num},
            )
        row_number += 1
        if not row or all(not cell.strip() for cell in row):
            continue
        report.rows_read += 1
        if len(row) < width:
            raise OntologyParseException(
                f"Row {row_number} has {len(row)} fields, expected at least {width}",
                {"row": row_number},
            )

        segment = _class_id_segment(row[columns[CLASS_ID_COLUMN]])
        if not _is_hp_segment(segment):
            report.skipped_non_hp += 1
            continue
        try:
            onto_id = normalize_id(segment)
        except InvalidIdException as e:
            raise OntologyParseException(f"Row {row_number}: {e.message}", {"row": row_number, "raw": e.raw})

        label = row[columns[LABEL_COLUMN]].strip()
        is_obsolete = label.lower().startswith("obsolete ") or (
            obsolete_col is not None
            and obsolete_col < len(row)
            and row[obsolete_col].strip().lower() == "true"
        )
        if is_obsolete and not include_obsolete:
            report.skipped_obsolete += 1
            continue

        if onto_id in seen:
            raise DuplicateConceptException(
                f"Duplicate ontology ID {onto_id} on rows {seen[onto_id]} and {row_number}",
                {"id": onto_id, "rows": [seen[onto_id], row_number]},
            )
        seen[onto_id] = row_number

        synonyms_cell = row[columns[SYNONYMS_COLUMN]]
        synonyms = [s for s in synonyms_cell.split(synonym_delimiter)] if synonyms_cell.strip() else []
        try:
            concept = ConceptRecord(id=onto_id, label=label, synonyms=synonyms)
        except ValidationError as e:
            raise OntologyParseException(f"Row {row_number}: {e.errors()[0]['msg']}", {"row": row_number})
        report.concepts.append(concept)

    if report.skipped_non_hp:
        logger.info(f"Skipped {report.skipped_non_hp} non-HP rows")
    if report.skipped_obsolete:
        logger.info(f"Skipped {report.skipped_obsolete} obsolete rows")
    return report


def parse_ontology_csv(
    data: bytes,
    synonym_delimiter: str = "|",
    include_obsolete: bool = True,
) -> List[ConceptRecord]:
    """Parse a BioPortal HP CSV export; see parse_ontology_report"""
    return parse_ontology_report(data, synonym_delimiter, include_obsolete).concepts


def build_entry_table(concepts: List[ConceptRecord]) -> EntryTable:
    """
    Expand concepts into the flat entry-term table

    Concepts keep file order, each label precedes its synonyms and synonyms
    keep file order. Surfaces shared by different concepts stay separate.

    Args:
        concepts: Concept records with unique IDs

    Returns:
        EntryTable
    """
    if not concepts:
        raise OntologyParseException("Cannot build an entry table from zero concepts")

    by_id: Dict[str, ConceptRecord] = {}
    entries: List[EntryTerm] = []
    for concept in concepts:
        if concept.id in by_id:
            raise DuplicateConceptException(f"Duplicate ontology ID {concept.id}", {"id": concept.id})
        by_id[concept.id] = concept
        entries.append(EntryTerm(surface=concept.label, id=concept.id, kind=EntryKind.PRIMARY_LABEL))
        for synonym in concept.synonyms:
            entries.append(EntryTerm(surface=synonym, id=concept.id, kind=EntryKind.SYNONYM))

    return EntryTable(entries=tuple(entries), by_id=by_id)


def load_entry_table(
    path: Path,
    synonym_delimiter: str = "|",
    include_obsolete: bool = True,
) -> EntryTable:
    """Read an ontology CSV from disk and expand it"""
    concepts = parse_ontology_csv(Path(path).read_bytes(), synonym_delimiter, include_obsolete)
    table = build_entry_table(concepts)
    logger.info(f"Loaded {table.label_count} labels, {len(table)} entry terms from {path}")
    return table


def serialize_entry_table(table: EntryTable) -> str:
    """Render the canonical entry-table TSV"""
    lines = ["\t".join(ENTRY_TABLE_HEADER)]
    for entry in table.entries:
        if "\t" in entry.surface or "\n" in entry.surface or "\r" in entry.surface:
            raise OntologyParseException(f"Surface cannot be written to TSV: {entry.surface!r}")
        lines.append(f"{entry.surface}\t{entry.id}\t{entry.kind.value}")
    return "\n".join(lines) + "\n"


def write_entry_table(table: EntryTable, path: Path) -> None:
    """Write the canonical entry-table file"""
    with atomic_write(path) as f:
        f.write(serialize_entry_table(table))


def parse_entry_table(text: str) -> EntryTable:
    """
    Rebuild an EntryTable from its TSV form

    Raises:
        OntologyParseException: On a bad header, bad row or orphan synonym
    """
    lines = text.splitlines()
    if not lines or tuple(lines[0].split("\t")) != ENTRY_TABLE_HEADER:
        raise OntologyParseException("Entry table header must be surface<TAB>id<TAB>kind", {"row": 1})

    concepts: Dict[str, dict] = {}
    for row_number, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise OntologyParseException(f"Row {row_number} has {len(fields)} fields, expected 3", {"row": row_number})
        surface, raw_id, kind = fields
        if not surface.strip():
            raise OntologyParseException(f"Row {row_number}: empty surface", {"row": row_number})
        try:
            onto_id = normalize_id(raw_id)
            entry_kind = EntryKind(kind)
        except (InvalidIdException, ValueError) as e:
            raise OntologyParseException(f"Row {row_number}: {e}", {"row": row_number})

        if entry_kind == EntryKind.PRIMARY_LABEL:
            if onto_id in concepts:
                raise DuplicateConceptException(f"Duplicate label row for {onto_id}", {"row": row_number})
            concepts[onto_id] = {"id": onto_id, "label": surface, "synonyms": [], "row": row_number}
        else:
            if onto_id not in concepts:
                raise OntologyParseException(
                    f"Row {row_number}: synonym for {onto_id} precedes its label", {"row": row_number}
                )
            concepts[onto_id]["synonyms"].append(surface)

    records = []
    for fields in concepts.values():
        row_number = fields.pop("row")
        try:
            records.append(ConceptRecord(**fields))
        except ValidationError as e:
            raise OntologyParseException(
                f"Row {row_number}: invalid concept {fields['id']}: {e.errors()[0]['msg']}", {"row": row_number}
            )
    return build_entry_table(records)


def read_entry_table(path: Path) -> EntryTable:
    """Read the canonical entry-table file"""
    return parse_entry_table(Path(path).read_text(encoding="utf-8"))


def check_release_counts(table: EntryTable, expected: Optional[tuple] = None) -> bool:
    """
    Compare label and entry counts with the pinned HPO release

    Returns:
        True when both counts match; otherwise logs a release-pin warning
    """
    labels, entries = expected or (RELEASE_LABEL_COUNT, RELEASE_ENTRY_COUNT)
    if table.label_count == labels and len(table) == entries:
        return True
    logger.warning(
        f"Entry table has {table.label_count} labels / {len(table)} entries; "
        f"the July-2024 HPO release has {labels} / {entries}. Counts are release-dependent."
    )
    return False
