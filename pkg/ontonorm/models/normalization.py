"""
Normalization run models and schemas
"""

import hashlib
import json
from datetime import datetime
from enum import Enum
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from ontonorm.core.config import MAX_CANDIDATES, Settings
from ontonorm.models.llm import ParseStatus
from ontonorm.models.ontology import OntoId
from ontonorm.models.retrieval import Candidate

RESULTS_SCHEMA_VERSION = "1"


class NormalizationMode(str, Enum):
    """Normalization method"""
    EMBED = "embed"
    LLM = "llm"
    RAG = "rag"


class ResultFlag(str, Enum):
    """Per-result markers"""
    OFF_LIST = "OffList"
    INVALID_ID = "InvalidId"
    NO_OUTPUT = "NoOutput"
    EXACT_MATCH = "ExactMatch"


class RunConfig(BaseModel):
    """Everything that determines the results of a run"""

    mode: NormalizationMode
    k: int = Field(default=20, ge=1, le=MAX_CANDIDATES)
    embedding_provider: Optional[str] = None
    chat_backend: Optional[str] = None
    model: Optional[str] = None
    temperature: float = 0.0
    candidate_renderer: Literal["label_id", "label"] = "label_id"
    fast_path: bool = True
    dedupe_by_id: bool = False
    clamp_to_candidates: bool = False
    prompt_version: str = "1"
    concurrency: int = Field(default=4, ge=1)

    @model_validator(mode="after")
    def validate_backends(self) -> "RunConfig":
        if self.mode in (NormalizationMode.EMBED, NormalizationMode.RAG) and not self.embedding_provider:
            raise ValueError(f"Mode {self.mode.value} needs an embedding provider")
        if self.mode in (NormalizationMode.LLM, NormalizationMode.RAG) and not self.chat_backend:
            raise ValueError(f"Mode {self.mode.value} needs a chat backend")
        return self

    @classmethod
    def from_settings(
        cls,
        settings: Settings,
        mode: NormalizationMode,
        embedding_provider: Optional[str] = None,
        chat_backend: Optional[str] = None,
        k: Optional[int] = None,
    ) -> "RunConfig":
        return cls(
            mode=mode,
            k=k if k is not None else settings.k,
            embedding_provider=embedding_provider,
            chat_backend=chat_backend,
            model=settings.model if mode != NormalizationMode.EMBED else None,
            temperature=settings.temperature,
            candidate_renderer=settings.candidate_renderer,
            fast_path=settings.fast_path_enabled,
            dedupe_by_id=settings.dedupe_by_id,
            clamp_to_candidates=settings.clamp_to_candidates,
            concurrency=settings.concurrency,
        )

    @property
    def config_hash(self) -> str:
        """Hash of the result-determining fields; concurrency is left out"""
        payload = json.dumps(self.model_dump(mode="json", exclude={"concurrency"}), sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


class NormalizationResult(BaseModel):
    """Outcome for one input term"""

    schema_version: str = RESULTS_SCHEMA_VERSION
    index: int = Field(ge=0)
    input: str
    mode: NormalizationMode
    k: Optional[int] = None
    chosen_surface: Optional[str] = None
    chosen_id: Optional[OntoId] = None
    reply_id: Optional[str] = None
    candidates: List[Candidate] = []
    cosine_of_choice: Optional[float] = None
    flags: List[ResultFlag] = []
    parse_status: Optional[ParseStatus] = None
    raw_reply: Optional[str] = None
    error: Optional[str] = None
    config_hash: str

    @field_validator("flags")
    @classmethod
    def validate_flags(cls, v: List[ResultFlag]) -> List[ResultFlag]:
        return sorted(set(v), key=lambda flag: flag.value)

    @model_validator(mode="after")
    def validate_outcome(self) -> "NormalizationResult":
        if ResultFlag.NO_OUTPUT in self.flags or self.error is not None:
            if self.chosen_surface is not None or self.chosen_id is not None:
                raise ValueError("A result without output cannot carry a choice")
        if self.mode == NormalizationMode.EMBED and self.error is None:
            if set(self.flags) & {ResultFlag.OFF_LIST, ResultFlag.INVALID_ID, ResultFlag.NO_OUTPUT}:
                raise ValueError("Embedding results are never off-list, invalid or empty")
            if not self.candidates or self.candidates[0].id != self.chosen_id:
                raise ValueError("Embedding results choose the rank-1 candidate")
        return self

    def has(self, flag: ResultFlag) -> bool:
        return flag in self.flags

    @property
    def no_output(self) -> bool:
        return self.has(ResultFlag.NO_OUTPUT)


class RunManifest(BaseModel):
    """Sidecar describing how a results file was produced"""

    schema_version: str = RESULTS_SCHEMA_VERSION
    tool_version: str
    results_file: Optional[str] = None
    config: RunConfig
    config_hash: str
    started_at: datetime
    finished_at: Optional[datetime] = None
    n_terms: int = 0
    n_resumed: int = 0
    n_errors: int = 0
    retry_counts: Dict[str, int] = {}


class BatchOutcome(BaseModel):
    """Results of a batch in input order plus the manifest"""

    results: List[NormalizationResult]
    manifest: RunManifest
