"""
Ontology models and schemas
"""

import re
from enum import Enum
from typing import Annotated, Dict, List, Tuple

from pydantic import AfterValidator, BaseModel, ConfigDict, ValidationInfo, field_validator, model_validator

from ontonorm.core.exceptions import InvalidIdException

ID_PREFIX = "HP"
ID_DIGITS = 7

# Optional IRI path, then PREFIX[:_]payload
_ID_PATTERN = re.compile(r"^(?:\S*[/#])?(?P<prefix>[A-Za-z]+)[:_]\s*(?P<payload>\S+)$")


def fold_surface(text: str) -> str:
    """Unicode case folding plus whitespace collapse"""
    return " ".join(text.casefold().split())


def normalize_id(raw: str) -> str:
    """
    Normalize an ontology identifier to its canonical form

    Accepts HP:0001265, HP_0001265, hp:0001265, "HP: 0001265" and IRIs ending
    in HP_0001265.

    Args:
        raw: Identifier as found in a file or a model reply

    Returns:
        Canonical identifier, e.g. "HP:0001265"

    Raises:
        InvalidIdException: On unknown prefix, non-digit payload or wrong digit count
    """
    if not isinstance(raw, str):
        raise InvalidIdException(repr(raw), "not a string")

    match = _ID_PATTERN.match(raw.strip())
    if not match:
        raise InvalidIdException(raw)

    prefix = match.group("prefix")
    payload = match.group("payload")
    if prefix.upper() != ID_PREFIX:
        raise InvalidIdException(raw, f"unknown prefix {prefix!r}")
    if not (payload.isascii() and payload.isdigit()):
        raise InvalidIdException(raw, "non-digit payload")
    if len(payload) != ID_DIGITS:
        raise InvalidIdException(raw, f"expected {ID_DIGITS} digits, got {len(payload)}")

    return f"{ID_PREFIX}:{payload}"


def _validate_onto_id(value: str) -> str:
    try:
        return normalize_id(value)
    except InvalidIdException as e:
        raise ValueError(e.message)


# Canonical "HP:nnnnnnn"; equality is plain string equality
OntoId = Annotated[str, AfterValidator(_validate_onto_id)]


class EntryKind(str, Enum):
    """Kind of searchable surface"""
    PRIMARY_LABEL = "PrimaryLabel"
    SYNONYM = "Synonym"


class ConceptRecord(BaseModel):
    """One ontology concept with its preferred label and synonyms"""

    model_config = ConfigDict(frozen=True)

    id: OntoId
    label: str
    synonyms: Tuple[str, ...] = ()

    @field_validator("label")
    @classmethod
    def validate_label(cls, v: str) -> str:
        v = v.strip()
        if not v:
            raise ValueError("Preferred label must not be empty")
        return v

    @field_validator("synonyms")
    @classmethod
    def dedupe_synonyms(cls, v: Tuple[str, ...], info: ValidationInfo) -> Tuple[str, ...]:
        """Trim, drop empties and drop repeats of each other or of the label"""
        seen = {info.data.get("label", "")}
        cleaned: List[str] = []
        for synonym in v:
            synonym = synonym.strip()
            if not synonym or synonym in seen:
                continue
            seen.add(synonym)
            cleaned.append(synonym)
        return tuple(cleaned)


class EntryTerm(BaseModel):
    """One searchable surface string bound to an ontology ID"""

    model_config = ConfigDict(frozen=True)

    surface: str
    id: OntoId
    kind: EntryKind

    @field_validator("surface")
    @classmethod
    def validate_surface(cls, v: str) -> str:
        if not v or v != v.strip():
            raise ValueError("Surface must be non-empty and trimmed")
        return v


class EntryTable(BaseModel):
    """Flat table of entry terms in deterministic order"""

    model_config = ConfigDict(frozen=True)

    entries: Tuple[EntryTerm, ...]
    by_id: Dict[str, ConceptRecord]

    @model_validator(mode="after")
    def validate_ids_resolve(self) -> "EntryTable":
        missing = sorted({entry.id for entry in self.entries if entry.id not in self.by_id})
        if missing:
            raise ValueError(f"Entry IDs missing from the concept table: {', '.join(missing[:10])}")
        return self

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def label_count(self) -> int:
        return sum(1 for entry in self.entries if entry.kind == EntryKind.PRIMARY_LABEL)


class ParseReport(BaseModel):
    """Outcome of parsing an ontology CSV"""

    concepts: List[ConceptRecord]
    rows_read: int = 0
    skipped_non_hp: int = 0
    skipped_obsolete: int = 0
