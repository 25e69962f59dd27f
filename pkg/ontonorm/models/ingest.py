"""
Ingest models: clinical documents, extracted signs, exclusions
"""

from datetime import datetime
from typing import FrozenSet, List

from pydantic import BaseModel, Field, field_validator

from ontonorm.models.ontology import fold_surface

MIM_PATTERN = r"^\d{6}$"


class ClinicalDocument(BaseModel):
    """Clinical-features text of one OMIM entry"""
    mim_number: str = Field(pattern=MIM_PATTERN)
    title: str = ""
    clinical_features_text: str
    fetched_at: datetime


class SkipRecord(BaseModel):
    """MIM number that yielded no document"""
    mim_number: str
    reason: str


class FetchReport(BaseModel):
    documents: List[ClinicalDocument] = []
    skipped: List[SkipRecord] = []
    network_calls: int = 0


class ExtractedSigns(BaseModel):
    """Signs extracted from one document: trimmed, non-empty, case-folded unique"""

    mim_number: str = Field(pattern=MIM_PATTERN)
    signs: List[str] = []

    @field_validator("signs")
    @classmethod
    def validate_signs(cls, v: List[str]) -> List[str]:
        out, seen = [], set()
        for sign in v:
            text = " ".join(sign.split())
            key = fold_surface(text)
            if text and key not in seen:
                seen.add(key)
                out.append(text)
        return out


class ExclusionList(BaseModel):
    """Curated malformed terms; matched exactly after case folding"""

    patterns: List[str] = []

    @property
    def folded(self) -> FrozenSet[str]:
        return frozenset(fold_surface(p) for p in self.patterns if p.strip())

    def __contains__(self, term: str) -> bool:
        return fold_surface(term) in self.folded
