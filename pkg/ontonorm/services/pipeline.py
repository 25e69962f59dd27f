"""
Normalization pipeline: embed-only, plain LLM and retrieval-augmented LLM
"""

import asyncio
import difflib
import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ontonorm import __version__
from ontonorm.core.exceptions import (
    ConfigurationException,
    EmbeddingDimensionException,
    EmbeddingProviderException,
    LLMReplyException,
    LLMRetriesExhaustedException,
    ResultsFileException,
    UsageException,
)
from ontonorm.core.files import read_jsonl, write_json
from ontonorm.models.llm import ChatRequest, LinkReply, ParseStatus, PromptContext, PromptPurpose
from ontonorm.models.normalization import (
    BatchOutcome,
    NormalizationMode,
    NormalizationResult,
    ResultFlag,
    RunConfig,
    RunManifest,
)
from ontonorm.models.ontology import fold_surface
from ontonorm.models.retrieval import Candidate
from ontonorm.services.embed_store import embed_batch
from ontonorm.services.llm_client import ChatBackend
from ontonorm.services.prompts import build_plain_prompt, build_rag_prompt
from ontonorm.services.providers import EmbeddingProvider
from ontonorm.services.reply_parser import parse_link_reply
from ontonorm.services.retriever import TermIndex

logger = logging.getLogger(__name__)

# Failures recorded on the result instead of aborting the batch
TERM_LEVEL_ERRORS = (
    EmbeddingProviderException,
    EmbeddingDimensionException,
    LLMRetriesExhaustedException,
    LLMReplyException,
)


def preprocess_term(term: str) -> str:
    """Trim and collapse internal whitespace; case is kept"""
    return " ".join(term.split())


def partial_path(out: Path) -> Path:
    return Path(f"{out}.partial")


def manifest_path(out: Path) -> Path:
    return Path(f"{out}.manifest.json")


class QueryVectorCache:
    """Query vectors per (provider, term), shared by runs in one process"""

    def __init__(self):
        self._vectors: Dict[Tuple[str, str], np.ndarray] = {}
        self.hits = 0
        self.misses = 0

    def __len__(self) -> int:
        return len(self._vectors)

    async def prefetch(
        self,
        provider: EmbeddingProvider,
        terms: Sequence[str],
        batch_size: int = 64,
        concurrency: int = 2,
    ) -> None:
        missing = sorted({t for t in terms if (provider.identifier, t) not in self._vectors})
        if not missing:
            return
        vectors = await embed_batch(provider, missing, batch_size, concurrency)
        for term, vector in zip(missing, vectors):
            self._vectors[(provider.identifier, term)] = vector

    async def get(self, provider: EmbeddingProvider, term: str) -> np.ndarray:
        key = (provider.identifier, term)
        if key in self._vectors:
            self.hits += 1
            return self._vectors[key]
        self.misses += 1
        vector = (await embed_batch(provider, [term]))[0]
        self._vectors[key] = vector
        return vector


def clamp_choice(best_match: str, candidates: Sequence[Candidate]) -> Candidate:
    """Candidate whose folded surface is most similar to the reply's match"""
    folded = fold_surface(best_match)
    ranked = sorted(candidates, key=lambda c: c.rank)
    # max() keeps the first maximum, i.e. the best-ranked one
    return max(
        ranked,
        key=lambda c: difflib.SequenceMatcher(None, folded, fold_surface(c.surface)).ratio(),
    )


class Normalizer:
    """Runs one normalization configuration over terms"""

    def __init__(
        self,
        config: RunConfig,
        index: Optional[TermIndex] = None,
        provider: Optional[EmbeddingProvider] = None,
        chat: Optional[ChatBackend] = None,
        cache: Optional[QueryVectorCache] = None,
        embed_batch_size: int = 64,
        embed_concurrency: int = 2,
    ):
        needs_index = config.mode in (NormalizationMode.EMBED, NormalizationMode.RAG)
        if needs_index and (index is None or provider is None):
            raise ConfigurationException(f"Mode {config.mode.value} needs a term index and an embedding provider")
        if config.mode != NormalizationMode.EMBED and chat is None:
            raise ConfigurationException(f"Mode {config.mode.value} needs a chat backend")
        self.config = config
        self.config_hash = config.config_hash
        self.index = index
        self.provider = provider
        self.chat = chat
        self.cache = cache or QueryVectorCache()
        self.embed_batch_size = embed_batch_size
        self.embed_concurrency = embed_concurrency

    def _result(self, position: int, term: str, **fields) -> NormalizationResult:
        return NormalizationResult(
            index=position,
            input=term,
            mode=self.config.mode,
            k=self.config.k if self.config.mode == NormalizationMode.RAG else None,
            config_hash=self.config_hash,
            **fields,
        )

    def _fast_path(self, position: int, term: str, text: str) -> Optional[NormalizationResult]:
        if not self.config.fast_path or self.index is None:
            return None
        hit = self.index.exact_match(text)
        if hit is None:
            return None
        return self._result(
            position,
            term,
            chosen_surface=hit.surface,
            chosen_id=hit.id,
            candidates=[hit],
            cosine_of_choice=hit.score,
            flags=[ResultFlag.EXACT_MATCH],
        )

    async def _ask(self, prompt: str, context: PromptContext) -> str:
        request = ChatRequest.for_prompt(prompt, self.config.model or "", self.config.temperature, context)
        return await self.chat.complete(request)

    def _from_reply(
        self, position: int, term: str, reply: LinkReply, candidates: List[Candidate]
    ) -> NormalizationResult:
        common = dict(
            candidates=candidates,
            parse_status=reply.parse_status,
            raw_reply=reply.raw_text,
            reply_id=reply.id,
        )
        if reply.parse_status == ParseStatus.UNPARSEABLE:
            return self._result(position, term, flags=[ResultFlag.NO_OUTPUT], **common)

        flags: List[ResultFlag] = []
        surface: Optional[str] = reply.best_match or None
        chosen_id: Optional[str] = reply.id if reply.id_valid else None

        if not reply.id_valid:
            flags.append(ResultFlag.INVALID_ID)
            if surface is None:
                return self._result(position, term, flags=flags + [ResultFlag.NO_OUTPUT], **common)
        elif self.config.mode == NormalizationMode.RAG and chosen_id not in {c.id for c in candidates}:
            flags.append(ResultFlag.OFF_LIST)

        off_list = ResultFlag.OFF_LIST in flags or ResultFlag.INVALID_ID in flags
        if off_list and self.config.clamp_to_candidates and candidates and surface:
            clamped = clamp_choice(surface, candidates)
            surface, chosen_id = clamped.surface, clamped.id

        if surface is None and chosen_id is not None:
            surface = self._surface_for(chosen_id, candidates)

        scores = [c.score for c in candidates if c.id == chosen_id]
        return self._result(
            position,
            term,
            chosen_surface=surface,
            chosen_id=chosen_id,
            cosine_of_choice=max(scores) if scores else None,
            flags=flags,
            **common,
        )

    def _surface_for(self, onto_id: str, candidates: Sequence[Candidate]) -> Optional[str]:
        for candidate in sorted(candidates, key=lambda c: c.rank):
            if candidate.id == onto_id:
                return candidate.surface
        if self.index is not None and onto_id in self.index.table.by_id:
            return self.index.table.by_id[onto_id].label
        return None

    async def normalize_one(self, term: str, position: int = 0) -> NormalizationResult:
        """
        Normalize a single term

        Raises:
            ValueError: Empty term
            EmbeddingProviderException: Query embedding failed
            LLMRetriesExhaustedException: Chat endpoint kept failing
        """
        text = preprocess_term(term) if isinstance(term, str) else ""
        if not text:
            raise ValueError("Cannot normalize an empty term")
        mode = self.config.mode

        if mode == NormalizationMode.LLM:
            context = PromptContext(purpose=PromptPurpose.LINK, term=text)
            raw = await self._ask(build_plain_prompt(text), context)
            return self._from_reply(position, term, parse_link_reply(raw), [])

        fast = self._fast_path(position, term, text)
        if fast is not None:
            return fast

        query = await self.cache.get(self.provider, text)
        if mode == NormalizationMode.EMBED:
            candidates = self.index.top_k(query, 1, self.config.dedupe_by_id)
            best = candidates[0]
            return self._result(
                position,
                term,
                chosen_surface=best.surface,
                chosen_id=best.id,
                candidates=candidates,
                cosine_of_choice=best.score,
            )

        candidates = self.index.top_k(query, self.config.k, self.config.dedupe_by_id)
        context = PromptContext(purpose=PromptPurpose.LINK, term=text, candidates=candidates)
        raw = await self._ask(build_rag_prompt(text, candidates, self.config.candidate_renderer), context)
        return self._from_reply(position, term, parse_link_reply(raw), candidates)

    async def _normalize_safe(self, term: str, position: int) -> NormalizationResult:
        try:
            return await self.normalize_one(term, position)
        except TERM_LEVEL_ERRORS as e:
            logger.warning(f"Term {position} ({term!r}) failed: {e.message}")
            return self._result(position, term, error=f"{type(e).__name__}: {e.message}")

    def _load_resumable(self, out: Path, terms: Sequence[str]) -> Dict[int, NormalizationResult]:
        done: Dict[int, NormalizationResult] = {}
        source = partial_path(out)
        if not source.exists():
            return done
        for row in read_partial_rows(source):
            result = NormalizationResult.model_validate(row)
            if result.config_hash != self.config_hash or result.error is not None:
                continue
            if result.index < len(terms) and terms[result.index] == result.input:
                done[result.index] = result
        logger.info(f"Resuming: {len(done)} of {len(terms)} terms already done in {source}")
        return done
        for row in read_jsonl(source):
            result = NormalizationResult.model_validate(row)
            if result.config_hash != self.config_hash or result.error is not None:
                continue
            if result.index < len(terms) and terms[result.index] == result.input:
                done[result.index] = result
        logger.info(f"Resuming: {len(done)} of {len(terms)} terms already done in {source}")
        return done

    async def run_batch(
        self,
        terms: Sequence[str],
        out: Optional[Path] = None,
        resume: bool = False,
    ) -> BatchOutcome:
        """
        Normalize terms in input order with a bounded number in flight

        With an output path, results go to <out>.partial in input order as
        soon as the completed prefix grows; the file is renamed to <out> when
        the batch finishes and a <out>.manifest.json sidecar is written.

        Args:
            terms: Input terms
            out: Results file (JSON lines)
            resume: Reuse results in <out>.partial made with the same config

        Returns:
            Results in input order and the run manifest
        """
        if not terms:
            raise UsageException("No terms to normalize")
        started = datetime.now(timezone.utc)
        out = Path(out) if out is not None else None
        done = self._load_resumable(out, terms) if out is not None and resume else {}
        todo = [i for i in range(len(terms)) if i not in done]

        if self.provider is not None and todo and self.config.mode != NormalizationMode.LLM:
            try:
                await self.cache.prefetch(
                    self.provider,
                    sorted({preprocess_term(terms[i]) for i in todo} - {""}),
                    self.embed_batch_size,
                    self.embed_concurrency,
                )
            except TERM_LEVEL_ERRORS as e:
                logger.warning(f"Batch embedding failed ({e.message}); embedding terms one by one")

        writer = _OrderedWriter(partial_path(out) if out is not None else None, len(terms))
        results: Dict[int, NormalizationResult] = {}
        limit = asyncio.Semaphore(self.config.concurrency)

        def collect(result: NormalizationResult) -> None:
            results[result.index] = result
            writer.add(result)

        async def work(position: int) -> None:
            async with limit:
                collect(await self._normalize_safe(terms[position], position))

        try:
            for position in sorted(done):
                collect(done[position])
            tasks = [asyncio.ensure_future(work(i)) for i in todo]
            try:
                await asyncio.gather(*tasks)
            except BaseException:
                for task in tasks:
                    task.cancel()
                await asyncio.gather(*tasks, return_exceptions=True)
                raise
        finally:
            writer.close()

        ordered = [results[i] for i in range(len(terms))]
        manifest = RunManifest(
            tool_version=__version__,
            results_file=str(out) if out is not None else None,
            config=self.config,
            config_hash=self.config_hash,
            started_at=started,
            finished_at=datetime.now(timezone.utc),
            n_terms=len(terms),
            n_resumed=len(done),
            n_errors=sum(1 for r in ordered if r.error is not None),
            retry_counts={
                "chat": getattr(self.chat, "retry_count", 0) if self.chat is not None else 0,
                "embeddings": getattr(self.provider, "retry_count", 0) if self.provider is not None else 0,
            },
        )
        if out is not None:
            partial_path(out).replace(out)
            write_json(manifest_path(out), manifest.model_dump(mode="json"))
            logger.info(f"Wrote {len(ordered)} results to {out} ({manifest.n_errors} errors)")
        return BatchOutcome(results=ordered, manifest=manifest)


class _OrderedWriter:
    """Appends results strictly in index order as the completed prefix grows"""

    def __init__(self, path: Optional[Path], total: int):
        self.total = total
        self.next_index = 0
        self.pending: Dict[int, NormalizationResult] = {}
        self.handle = None
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            self.handle = path.open("w", encoding="utf-8", newline="\n")

    def add(self, result: NormalizationResult) -> None:
        self.pending[result.index] = result
        while self.next_index in self.pending:
            ready = self.pending.pop(self.next_index)
            if self.handle is not None:
                self.handle.write(serialize_result(ready) + "\n")
            self.next_index += 1
        if self.handle is not None:
            self.handle.flush()

    def close(self) -> None:
        if self.handle is not None:
            self.handle.close()
            self.handle = None


def serialize_result(result: NormalizationResult) -> str:
    """One JSON line; field order is fixed by the model"""
    return result.model_dump_json()


def read_partial_rows(path: Path) -> List[dict]:
    """
    Rows of an interrupted run's partial file

    A run killed mid-write leaves a truncated final line; it is dropped with
    a warning and the writer rewrites the file from the kept rows.

    Raises:
        ResultsFileException: An unparseable line before the last one
    """
    lines = [line for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]
    rows = []
    for number, line in enumerate(lines, start=1):
        try:
            rows.append(json.loads(line))
        except json.JSONDecodeError as e:
            if number < len(lines):
                raise ResultsFileException(
                    f"{path}: line {number} is not valid JSON: {e.msg}",
                    {"path": str(path), "line": number},
                )
            logger.warning(f"{path}: dropping truncated final line {number}")
    return rows


def read_results(path: Path) -> List[NormalizationResult]:
    """Read a results file back into models"""
    return [NormalizationResult.model_validate(row) for row in read_jsonl(path)]


async def normalize_one(
    term: str,
    config: RunConfig,
    index: Optional[TermIndex] = None,
    provider: Optional[EmbeddingProvider] = None,
    chat: Optional[ChatBackend] = None,
) -> NormalizationResult:
    return await Normalizer(config, index, provider, chat).normalize_one(term)


async def run_batch(
    terms: Sequence[str],
    config: RunConfig,
    index: Optional[TermIndex] = None,
    provider: Optional[EmbeddingProvider] = None,
    chat: Optional[ChatBackend] = None,
    out: Optional[Path] = None,
    resume: bool = False,
) -> BatchOutcome:
    return await Normalizer(config, index, provider, chat).run_batch(terms, out, resume)
