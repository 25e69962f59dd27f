"""
Deterministic offline chat backend

Answers from the structured PromptContext attached to each request instead
of reading the prompt text. Same interface as ChatClient.
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Mapping, Optional

from ontonorm.core.exceptions import PromptException
from ontonorm.models.llm import ChatRequest, MockPolicy, PromptContext, PromptPurpose
from ontonorm.models.retrieval import Candidate
from ontonorm.models.ontology import fold_surface

logger = logging.getLogger(__name__)


def load_reply_table(path: Path) -> Dict[str, str]:
    """
    Load a reply table: JSON object mapping key -> verbatim reply

    Keys are the input term, or "term<TAB>candidate" for judge prompts.
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as e:
        raise PromptException(f"Cannot read mock reply table {path}: {str(e)}")
    if not isinstance(data, dict) or not all(isinstance(v, str) for v in data.values()):
        raise PromptException(f"Mock reply table {path} must map strings to strings")
    return data


def _reply_for(candidate: Candidate) -> str:
    return json.dumps({"best_match": candidate.surface, "hpo_id": candidate.id}, ensure_ascii=False)


class MockChatClient:
    """Chat backend with fixed, input-determined replies"""

    def __init__(self, policy: MockPolicy, table: Optional[Mapping[str, str]] = None):
        self.policy = MockPolicy(policy)
        self.table: Dict[str, str] = dict(table or {})
        self.identifier = f"mock:{self.policy.value}"
        self.retry_count = 0
        self.call_history: List[ChatRequest] = []

    def _pick(self, candidates: List[Candidate], term: str) -> Candidate:
        by_rank = sorted(candidates, key=lambda c: c.rank)
        if self.policy == MockPolicy.FIRST_CANDIDATE:
            return by_rank[0]
        if self.policy == MockPolicy.EXACT_SURFACE_ELSE_HIGHEST_COSINE:
            folded = fold_surface(term)
            for candidate in by_rank:
                if fold_surface(candidate.surface) == folded:
                    return candidate
        # max() keeps the first of equal scores, i.e. the better rank
        return max(by_rank, key=lambda c: c.score)

    def _answer(self, context: PromptContext) -> str:
        if context.key in self.table:
            return self.table[context.key]
        if self.policy == MockPolicy.FIXED_TABLE:
            return ""

        if context.purpose == PromptPurpose.JUDGE:
            same = fold_surface(context.term) == fold_surface(context.candidate_surface or "")
            return "yes" if same else "no"
        if context.purpose == PromptPurpose.EXTRACT:
            return json.dumps({"Signs": []})
        if not context.candidates:
            # Nothing to choose from without retrieval
            return ""
        return _reply_for(self._pick(list(context.candidates), context.term))

    async def complete(self, request: ChatRequest) -> str:
        self.call_history.append(request)
        if request.context is None:
            raise PromptException("The mock backend needs a prompt context on every request")
        return self._answer(request.context)

    def reset(self) -> None:
        self.call_history = []
