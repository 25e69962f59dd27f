"""
Semantic-equivalence judges: cosine, LLM and human review
"""

import asyncio
import logging
from typing import Dict, Optional, Sequence, Tuple

from ontonorm.core.exceptions import ConfigurationException
from ontonorm.models.evaluation import EquivalenceVerdict, GoldRecord
from ontonorm.models.llm import ChatRequest, PromptContext, PromptPurpose
from ontonorm.models.normalization import NormalizationResult
from ontonorm.services.embed_store import cosine
from ontonorm.services.llm_client import ChatBackend
from ontonorm.services.pipeline import QueryVectorCache, preprocess_term
from ontonorm.services.prompts import build_judge_prompt
from ontonorm.services.providers import EmbeddingProvider
from ontonorm.services.reply_parser import parse_judge_verdict

logger = logging.getLogger(__name__)

Pair = Tuple[str, str]


def _check_threshold(threshold: float) -> None:
    if not 0.0 < threshold <= 1.0:
        raise ConfigurationException(f"Cosine threshold must be in (0, 1], got {threshold}")


async def judge_cosine(
    term: str,
    candidate_surface: str,
    threshold: float,
    provider: EmbeddingProvider,
    cache: Optional[QueryVectorCache] = None,
) -> Tuple[float, bool]:
    """Cosine between the two embeddings and whether it reaches the threshold"""
    _check_threshold(threshold)
    cache = cache or QueryVectorCache()
    a = await cache.get(provider, preprocess_term(term))
    b = await cache.get(provider, preprocess_term(candidate_surface))
    score = cosine(a, b)
    return score, score >= threshold


async def judge_llm(term: str, candidate_surface: str, backend: ChatBackend, model: str = "") -> bool:
    """
    Ask the judge model whether the two terms are equivalent

    Raises:
        JudgeVerdictException: Reply is not a yes/no verdict
    """
    context = PromptContext(purpose=PromptPurpose.JUDGE, term=term, candidate_surface=candidate_surface)
    request = ChatRequest.for_prompt(build_judge_prompt(term, candidate_surface), model, 0.0, context)
    return parse_judge_verdict(await backend.complete(request))


class EquivalenceAssessor:
    """Builds equivalence verdicts from whichever tiers are configured"""

    def __init__(
        self,
        threshold: float = 0.90,
        provider: Optional[EmbeddingProvider] = None,
        judge: Optional[ChatBackend] = None,
        judge_model: str = "",
        human: Optional[Dict[Pair, bool]] = None,
        cache: Optional[QueryVectorCache] = None,
        concurrency: int = 4,
    ):
        _check_threshold(threshold)
        self.threshold = threshold
        self.provider = provider
        self.judge = judge
        self.judge_model = judge_model
        self.human: Dict[Pair, bool] = dict(human or {})
        self.cache = cache or QueryVectorCache()
        self.concurrency = concurrency
        self._llm_cache: Dict[Pair, bool] = {}

    async def _cosine(self, result: NormalizationResult) -> Optional[float]:
        if result.cosine_of_choice is not None:
            return result.cosine_of_choice
        if self.provider is None:
            return None
        score, _ = await judge_cosine(result.input, result.chosen_surface, self.threshold, self.provider, self.cache)
        return score

    async def _llm(self, pair: Pair) -> Optional[bool]:
        if self.judge is None:
            return None
        if pair not in self._llm_cache:
            self._llm_cache[pair] = await judge_llm(pair[0], pair[1], self.judge, self.judge_model)
        return self._llm_cache[pair]

    async def assess(self, result: NormalizationResult) -> Optional[EquivalenceVerdict]:
        """Verdict for the result's choice; None when there is nothing to judge"""
        if result.error is not None or result.no_output or not result.chosen_surface:
            return None
        pair = (result.input, result.chosen_surface)
        return EquivalenceVerdict.combine(
            cosine_score=await self._cosine(result),
            threshold=self.threshold,
            llm_verdict=await self._llm(pair),
            human_verdict=self.human.get(pair),
        )

    async def assess_all(
        self,
        results: Sequence[NormalizationResult],
        gold: Optional[Sequence[GoldRecord]] = None,
    ) -> Dict[int, EquivalenceVerdict]:
        """
        Verdicts keyed by result index

        With gold records only results that carry the gold ID are judged,
        since a wrong ID is an FP whatever the verdict.
        """
        limit = asyncio.Semaphore(self.concurrency)

        def needs_verdict(position: int, result: NormalizationResult) -> bool:
            if gold is None:
                return True
            record = gold[position]
            return not record.malformed and result.chosen_id == record.gold_id

        async def one(result: NormalizationResult):
            async with limit:
                return result.index, await self.assess(result)

        pending = [one(r) for i, r in enumerate(results) if needs_verdict(i, r)]
        verdicts = {}
        for position, verdict in await asyncio.gather(*pending):
            if verdict is not None:
                verdicts[position] = verdict
        logger.info(f"Judged {len(verdicts)} choices (threshold {self.threshold})")
        return verdicts
