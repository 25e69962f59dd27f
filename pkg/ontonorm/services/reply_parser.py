"""
Tolerant parsing of model replies
"""

import json
import re
from typing import Any, Dict, List, Optional

from ontonorm.core.exceptions import ExtractionException, InvalidIdException, JudgeVerdictException
from ontonorm.models.llm import LinkReply, ParseStatus
from ontonorm.models.ontology import normalize_id

CANONICAL_MATCH_KEY = "best_match"
CANONICAL_ID_KEY = "hpo_id"

# Compared after lowercasing and mapping spaces/hyphens to underscores
MATCH_KEY_ALIASES = ("best_match", "term")
ID_KEY_ALIASES = ("hpo_id", "id")

_FENCE = re.compile(r"```(?:json|JSON)?")
_SMART_QUOTES = str.maketrans({"“": '"', "”": '"', "‘": "'", "’": "'"})

_decoder = json.JSONDecoder()


def _key_form(key: str) -> str:
    return re.sub(r"[\s\-]+", "_", key.strip().lower())


def _scan_objects(text: str) -> Optional[Dict[str, Any]]:
    for match in re.finditer(r"\{", text):
        try:
            value, _ = _decoder.raw_decode(text, match.start())
        except json.JSONDecodeError:
            continue
        if isinstance(value, dict):
            return value
    return None


def extract_first_json_object(text: str) -> Optional[Dict[str, Any]]:
    """
    First JSON object in a reply, tolerating prose and code fences

    Later objects are ignored. Typographic quotes are straightened only when
    the text does not parse as written.
    """
    if not text:
        return None
    cleaned = _FENCE.sub("", text)
    found = _scan_objects(cleaned)
    if found is None:
        found = _scan_objects(cleaned.translate(_SMART_QUOTES))
    return found


def _lookup(obj: Dict[str, Any], aliases) -> Optional[tuple]:
    """(original key, value) of the first alias present"""
    forms = {_key_form(key): key for key in obj if isinstance(key, str)}
    for alias in aliases:
        if alias in forms:
            key = forms[alias]
            return key, obj[key]
    return None


def parse_link_reply(raw: str) -> LinkReply:
    """
    Parse a normalization reply; never raises

    Clean needs the canonical keys best_match/hpo_id, a non-empty match and
    a valid ID. Alias keys give RepairedKeys, a missing or malformed ID gives
    InvalidId and a reply without a usable object gives Unparseable.
    """
    raw = raw if isinstance(raw, str) else ""
    obj = extract_first_json_object(raw)
    if obj is None:
        return LinkReply(parse_status=ParseStatus.UNPARSEABLE, raw_text=raw)

    match_hit = _lookup(obj, MATCH_KEY_ALIASES)
    id_hit = _lookup(obj, ID_KEY_ALIASES)
    if match_hit is None and id_hit is None:
        return LinkReply(parse_status=ParseStatus.UNPARSEABLE, raw_text=raw)

    best_match = ""
    if match_hit is not None and match_hit[1] is not None:
        best_match = str(match_hit[1]).strip()

    raw_id = None if id_hit is None or id_hit[1] is None else str(id_hit[1]).strip()
    try:
        canonical = normalize_id(raw_id) if raw_id else None
    except InvalidIdException:
        canonical = None
    if canonical is None:
        return LinkReply(best_match=best_match, id=raw_id, parse_status=ParseStatus.INVALID_ID, raw_text=raw)

    clean_keys = (
        match_hit is not None
        and match_hit[0] == CANONICAL_MATCH_KEY
        and id_hit[0] == CANONICAL_ID_KEY
    )
    status = ParseStatus.CLEAN if clean_keys and best_match else ParseStatus.REPAIRED_KEYS
    return LinkReply(best_match=best_match, id=canonical, id_valid=True, parse_status=status, raw_text=raw)


_YES = {"yes", "true", "equivalent", "y"}
_NO = {"no", "false", "n", "inequivalent", "nonequivalent"}
_NEGATIONS = {"not", "isn't", "aren't"}


def _verdict_word(value: Any) -> Optional[bool]:
    """First yes/no token of the first sentence; "not equivalent" reads as no"""
    if isinstance(value, bool):
        return value
    if not isinstance(value, str):
        return None
    sentence = re.split(r"[.!?\n]", value.strip().lower(), maxsplit=1)[0]
    words = re.findall(r"[a-z']+", sentence)
    for position, word in enumerate(words):
        if word in _NEGATIONS:
            if position + 1 < len(words) and words[position + 1] in _YES:
                return False
            continue
        # single letters only count as the whole answer
        if len(word) == 1 and len(words) > 1:
            continue
        if word in _YES:
            return True
        if word in _NO:
            return False
    return None


def parse_judge_verdict(raw: str) -> bool:
    """
    Parse a yes/no equivalence verdict

    Raises:
        JudgeVerdictException: When the reply is not a clear verdict
    """
    obj = extract_first_json_object(raw or "")
    if obj is not None:
        for key, value in obj.items():
            if _key_form(str(key)) in ("equivalent", "verdict", "answer", "is_equivalent"):
                verdict = _verdict_word(value)
                if verdict is not None:
                    return verdict
    verdict = _verdict_word(raw)
    if verdict is None:
        raise JudgeVerdictException(f"Unparseable judge verdict: {(raw or '')[:80]!r}", {"raw": raw})
    return verdict


def parse_signs_reply(raw: str) -> List[str]:
    """
    Signs list from an extraction reply ({"Signs": [...]})

    Raises:
        ExtractionException: When no Signs list can be found
    """
    obj = extract_first_json_object(raw or "")
    if obj is None:
        raise ExtractionException("Extraction reply has no JSON object", {"raw": raw})
    for key, value in obj.items():
        if _key_form(str(key)) == "signs" and isinstance(value, list):
            return [str(item) for item in value if isinstance(item, (str, int, float))]
    raise ExtractionException("Extraction reply has no 'Signs' list", {"raw": raw})
