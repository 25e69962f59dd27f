"""
Prompt builders over the pinned templates in ontonorm/prompts/

plain.txt, rag.txt and extract.txt are the published prompt texts with
typographic quotes straightened; judge.txt is our own wording. Template
files end with one newline that is not part of the prompt.
"""

import json
import re
from functools import lru_cache
from importlib import resources
from typing import Dict, List, Sequence

from ontonorm.core.config import MAX_CANDIDATES
from ontonorm.core.exceptions import PromptException
from ontonorm.models.retrieval import Candidate

PROMPT_VERSION = "1"

TERM_SLOT = "{term}"
CANDIDATE_SLOT = "{candidate}"
INPUT_SLOT = "{input}"
MATCHES_SLOT = "[match_1...match_20]"

RENDERERS = ("label_id", "label")


@lru_cache(maxsize=None)
def load_template(name: str) -> str:
    """Read a template resource, e.g. "plain" -> prompts/plain.txt"""
    text = resources.files("ontonorm.prompts").joinpath(f"{name}.txt").read_text(encoding="utf-8")
    return text[:-1] if text.endswith("\n") else text


def _fill(template: str, values: Dict[str, str]) -> str:
    """Single-pass substitution so inserted text is never re-scanned"""
    pattern = re.compile("|".join(re.escape(slot) for slot in values))
    return pattern.sub(lambda m: values[m.group(0)], template)


def _require_text(value: str, what: str) -> str:
    if not isinstance(value, str) or not value.strip():
        raise PromptException(f"{what} must be a non-empty string")
    return value


def build_plain_prompt(term: str) -> str:
    """Normalization prompt without candidates"""
    _require_text(term, "Term")
    return _fill(load_template("plain"), {TERM_SLOT: term})


def render_candidates(candidates: Sequence[Candidate], renderer: str = "label_id") -> str:
    """
    Candidate list as a JSON-style list of strings, rank order

    label_id renders "Label (HP:nnnnnnn)"; label renders the surface only.
    """
    if renderer not in RENDERERS:
        raise PromptException(f"Unknown candidate renderer {renderer!r}")
    ordered = sorted(candidates, key=lambda c: c.rank)
    items: List[str] = [c.render(with_id=renderer == "label_id") for c in ordered]
    return json.dumps(items, ensure_ascii=False)


def build_rag_prompt(term: str, candidates: Sequence[Candidate], renderer: str = "label_id") -> str:
    """
    Normalization prompt listing retrieved candidates

    Raises:
        PromptException: Empty term, no candidates or more than 50
    """
    _require_text(term, "Term")
    if not candidates:
        raise PromptException("The RAG prompt needs at least one candidate")
    if len(candidates) > MAX_CANDIDATES:
        raise PromptException(
            f"The RAG prompt takes up to {MAX_CANDIDATES} candidates, got {len(candidates)}",
            {"candidates": len(candidates)},
        )
    return _fill(
        load_template("rag"),
        {TERM_SLOT: term, MATCHES_SLOT: render_candidates(candidates, renderer)},
    )


def build_extraction_prompt(clinical_text: str) -> str:
    """Sign/symptom extraction prompt with the text attached as the input object"""
    _require_text(clinical_text, "Clinical text")
    payload = json.dumps({"clinical Features": clinical_text}, ensure_ascii=False)
    return _fill(load_template("extract"), {INPUT_SLOT: payload})


def build_judge_prompt(term: str, candidate: str) -> str:
    """Binary semantic-equivalence question"""
    _require_text(term, "Term")
    _require_text(candidate, "Candidate")
    return _fill(load_template("judge"), {TERM_SLOT: term, CANDIDATE_SLOT: candidate})
