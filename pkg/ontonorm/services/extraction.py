"""
Sign/symptom extraction from clinical documents and malformed-term exclusion
"""

import asyncio
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from ontonorm.core.exceptions import (
    ExtractionException,
    LLMReplyException,
    LLMRetriesExhaustedException,
    LLMTransportException,
)
from ontonorm.core.files import atomic_write, read_jsonl, read_terms_file
from ontonorm.models.ingest import ClinicalDocument, ExclusionList, ExtractedSigns
from ontonorm.models.llm import ChatRequest, PromptContext, PromptPurpose
from ontonorm.models.ontology import fold_surface
from ontonorm.services.llm_client import ChatBackend
from ontonorm.services.prompts import build_extraction_prompt
from ontonorm.services.reply_parser import parse_signs_reply

logger = logging.getLogger(__name__)

# Per-document failures; an auth failure still aborts the whole run
DOCUMENT_ERRORS = (
    ExtractionException,
    LLMRetriesExhaustedException,
    LLMReplyException,
    LLMTransportException,
)

# Published examples of malformed extracted terms; the full curated list is not public
STARTER_EXCLUSIONS = (
    "impaired visual pathways",
    "initial good response to dopaminergic therapy",
    "intermittent microsaccadic pursuits",
    "intermittent mobility",
    "intermittent tetanic contraction",
    "intrusive square wave jerks",
    "jerky voice",
    "kineto rigid syndrome",
    "legs and arms",
)


async def extract_signs(
    doc: ClinicalDocument,
    backend: ChatBackend,
    model: str = "",
    attempts: int = 2,
) -> ExtractedSigns:
    """
    Extract signs from one document

    Raises:
        ExtractionException: No parseable Signs list after all attempts
    """
    if not doc.clinical_features_text.strip():
        raise ExtractionException(f"MIM {doc.mim_number} has no clinical-features text")
    context = PromptContext(purpose=PromptPurpose.EXTRACT, term=doc.mim_number)
    request = ChatRequest.for_prompt(build_extraction_prompt(doc.clinical_features_text), model, 0.0, context)

    last: Optional[ExtractionException] = None
    for attempt in range(1, attempts + 1):
        raw = await backend.complete(request)
        try:
            signs = parse_signs_reply(raw)
        except ExtractionException as e:
            logger.warning(f"MIM {doc.mim_number}: attempt {attempt}/{attempts}: {e.message}")
            last = e
            continue
        return ExtractedSigns(mim_number=doc.mim_number, signs=signs)
    raise ExtractionException(
        f"MIM {doc.mim_number}: no parseable reply after {attempts} attempt(s): {last.message}",
        {"mim_number": doc.mim_number},
    )


async def extract_all(
    docs: Sequence[ClinicalDocument],
    backend: ChatBackend,
    model: str = "",
    attempts: int = 2,
    concurrency: int = 4,
) -> Tuple[List[ExtractedSigns], Dict[str, str]]:
    """Extract every document; failures are collected per MIM number"""
    limit = asyncio.Semaphore(concurrency)

    async def one(doc: ClinicalDocument):
        async with limit:
            try:
                return await extract_signs(doc, backend, model, attempts)
            except DOCUMENT_ERRORS as e:
                logger.warning(f"MIM {doc.mim_number} failed: {e.message}")
                return e

    extracted: List[ExtractedSigns] = []
    failures: Dict[str, str] = {}
    for doc, outcome in zip(docs, await asyncio.gather(*(one(d) for d in docs))):
        if isinstance(outcome, DOCUMENT_ERRORS):
            failures[doc.mim_number] = outcome.message
        else:
            extracted.append(outcome)
    total = sum(len(e.signs) for e in extracted)
    logger.info(f"Extracted {total} signs from {len(extracted)} documents ({len(failures)} failed)")
    return extracted, failures


def load_exclusions(path: Optional[Path] = None) -> ExclusionList:
    """Exclusion list from a file (one term per line), else the starter list"""
    if path is None:
        return ExclusionList(patterns=list(STARTER_EXCLUSIONS))
    return ExclusionList(patterns=read_terms_file(path))


def apply_exclusions(signs: Sequence[str], exclusions: ExclusionList) -> Tuple[List[str], List[str]]:
    """Split signs into (kept, dropped) by exact case-folded match"""
    folded = exclusions.folded
    kept: List[str] = []
    dropped: List[str] = []
    for sign in signs:
        (dropped if fold_surface(sign) in folded else kept).append(sign)
    return kept, dropped


def write_documents(docs: Sequence[ClinicalDocument], path: Path) -> None:
    with atomic_write(Path(path)) as f:
        for doc in docs:
            f.write(doc.model_dump_json() + "\n")


def read_documents(path: Path) -> List[ClinicalDocument]:
    return [ClinicalDocument.model_validate(row) for row in read_jsonl(path)]


def write_signs(extracted: Sequence[ExtractedSigns], path: Path) -> None:
    with atomic_write(Path(path)) as f:
        for item in extracted:
            f.write(item.model_dump_json() + "\n")
