import logging

import pytest

from conftest import HPO_CSV
from ontonorm.core.exceptions import DuplicateConceptException, InvalidIdException, OntologyParseException
from ontonorm.models.ontology import ConceptRecord, EntryKind, fold_surface, normalize_id
from ontonorm.services.ontology import (
    build_entry_table,
    check_release_counts,
    parse_entry_table,
    parse_ontology_csv,
    parse_ontology_report,
    read_entry_table,
    serialize_entry_table,
    write_entry_table,
)

HEADER = "Class ID,Preferred Label,Synonyms,Definitions,Obsolete,Parents\n"


def _csv(*rows: str) -> bytes:
    return (HEADER + "".join(row + "\n" for row in rows)).encode("utf-8")


@pytest.mark.parametrize(
    "raw",
    [
        "HP:0001265",
        "HP_0001265",
        "hp:0001265",
        " HP:0001265 ",
        "HP: 0001265",
        "hp_ 0001265",
        "http://purl.obolibrary.org/obo/HP_0001265",
    ],
)
def test_normalize_id_accepts_known_spellings(raw):
    assert normalize_id(raw) == "HP:0001265"


@pytest.mark.parametrize("raw", ["HP:9999", "HP 0001265", "HP: 00012 65", "HP:00012650", "MP:0001265", "HP:00012a5", "Hyporeflexia", ""])
def test_normalize_id_rejects_malformed(raw):
    with pytest.raises(InvalidIdException):
        normalize_id(raw)


def test_fold_surface():
    assert fold_surface("  Gait   ATAXIA ") == "gait ataxia"
    assert fold_surface("Straße") == fold_surface("STRASSE")


def test_parse_fixture_counts():
    report = parse_ontology_report(HPO_CSV.read_bytes())

    assert report.rows_read == 53
    assert report.skipped_non_hp == 2
    assert report.skipped_obsolete == 0
    assert len(report.concepts) == 51
    assert report.concepts[0].id == "HP:0001265"
    assert report.concepts[0].synonyms == ("Decreased reflexes", "Reduced tendon reflexes")


def test_parse_can_drop_obsolete_rows():
    report = parse_ontology_report(HPO_CSV.read_bytes(), include_obsolete=False)

    assert report.skipped_obsolete == 1
    assert len(report.concepts) == 50
    assert "HP:0009999" not in {c.id for c in report.concepts}


def test_synonyms_are_trimmed_and_deduplicated():
    concepts = parse_ontology_csv(
        _csv("HP_0001332,Dystonia, Dystonia | Torsion dystonia||Torsion dystonia ,,false,")
    )
    assert concepts[0].synonyms == ("Torsion dystonia",)


def test_custom_synonym_delimiter():
    concepts = parse_ontology_csv(_csv("HP_0001265,Hyporeflexia,Decreased reflexes;Hyporeflexia of legs,,false,"), ";")
    assert concepts[0].synonyms == ("Decreased reflexes", "Hyporeflexia of legs")


def test_missing_column_is_reported():
    with pytest.raises(OntologyParseException) as exc:
        parse_ontology_csv(b"Class ID,Preferred Label\nHP_0001265,Hyporeflexia\n")
    assert "Synonyms" in exc.value.message


def test_duplicate_id_names_both_rows():
    data = _csv("HP_0001265,Hyporeflexia,,,false,", "HP_0001265,Areflexia,,,false,")
    with pytest.raises(DuplicateConceptException) as exc:
        parse_ontology_csv(data)
    assert exc.value.details["rows"] == [2, 3]


def test_bad_hp_payload_is_a_parse_error():
    with pytest.raises(OntologyParseException) as exc:
        parse_ontology_csv(_csv("HP_12345,Broken,,,false,"))
    assert exc.value.details["row"] == 2


def test_entry_table_order_and_counts(entry_table):
    assert entry_table.label_count == 51
    assert len(entry_table) == 93

    first = entry_table.entries[:3]
    assert [(e.surface, e.kind) for e in first] == [
        ("Hyporeflexia", EntryKind.PRIMARY_LABEL),
        ("Decreased reflexes", EntryKind.SYNONYM),
        ("Reduced tendon reflexes", EntryKind.SYNONYM),
    ]


def test_shared_surface_stays_separate(entry_table):
    shared = [e.id for e in entry_table.entries if e.surface == "Incoordination"]
    assert shared == ["HP:0001251", "HP:0001310"]


def test_every_entry_resolves_to_its_concept(entry_table):
    for entry in entry_table.entries:
        concept = entry_table.by_id[entry.id]
        if entry.kind == EntryKind.PRIMARY_LABEL:
            assert entry.surface == concept.label
        else:
            assert entry.surface in concept.synonyms


def test_build_entry_table_rejects_empty_input():
    with pytest.raises(OntologyParseException):
        build_entry_table([])


def test_entry_table_file_rebuilds_the_same_table(entry_table):
    text = serialize_entry_table(entry_table)

    assert text.startswith("surface\tid\tkind\nHyporeflexia\tHP:0001265\tPrimaryLabel\n")
    assert parse_entry_table(text) == entry_table


def test_entry_table_file_rejects_orphan_synonym():
    text = "surface\tid\tkind\nDecreased reflexes\tHP:0001265\tSynonym\n"
    with pytest.raises(OntologyParseException):
        parse_entry_table(text)


def test_release_count_mismatch_warns(entry_table, caplog):
    with caplog.at_level(logging.WARNING):
        assert check_release_counts(entry_table) is False
    assert "release-dependent" in caplog.text
    assert check_release_counts(entry_table, (51, 93)) is True


def test_concept_label_must_not_be_blank():
    with pytest.raises(ValueError):
        ConceptRecord(id="HP:0001265", label="   ")


def test_entry_table_file_round_trip_is_byte_identical(entry_table, tmp_path):
    first = tmp_path / "entries.tsv"
    second = tmp_path / "again.tsv"
    write_entry_table(entry_table, first)
    write_entry_table(read_entry_table(first), second)

    assert first.read_bytes() == second.read_bytes()


@pytest.mark.parametrize(
    "body, row",
    [
        ("\tHP:0001265\tPrimaryLabel\n", 2),
        ("Hyporeflexia\tHP:0001265\tPrimaryLabel\n  \tHP:0001265\tSynonym\n", 3),
    ],
)
def test_entry_table_file_rejects_empty_surfaces(body, row):
    with pytest.raises(OntologyParseException) as exc:
        parse_entry_table("surface\tid\tkind\n" + body)
    assert exc.value.details["row"] == row
