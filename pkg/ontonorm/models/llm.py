"""
Chat-completions models and schemas
"""

from enum import Enum
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ontonorm.models.retrieval import Candidate


class PromptPurpose(str, Enum):
    """What a prompt asks the model to do"""
    LINK = "link"
    JUDGE = "judge"
    EXTRACT = "extract"


class PromptContext(BaseModel):
    """Structured side information for a prompt; never sent over the wire"""

    purpose: PromptPurpose
    term: str
    candidates: List[Candidate] = []
    candidate_surface: Optional[str] = None

    @property
    def key(self) -> str:
        """Lookup key used by table-driven mock replies"""
        if self.purpose == PromptPurpose.JUDGE:
            return f"{self.term}\t{self.candidate_surface}"
        return self.term


class ChatMessage(BaseModel):
    """Chat message"""
    role: Literal["system", "user", "assistant"]
    content: str


class ChatRequest(BaseModel):
    """Chat-completions request carrying one user prompt"""

    model: str
    messages: List[ChatMessage]
    temperature: float = 0.0
    response_format: Optional[dict] = None
    context: Optional[PromptContext] = Field(default=None, exclude=True)

    @model_validator(mode="after")
    def validate_single_prompt(self) -> "ChatRequest":
        if sum(1 for message in self.messages if message.role == "user") != 1:
            raise ValueError("A request carries exactly one user message")
        return self

    @classmethod
    def for_prompt(
        cls,
        prompt: str,
        model: str,
        temperature: float = 0.0,
        context: Optional[PromptContext] = None,
    ) -> "ChatRequest":
        return cls(
            model=model,
            messages=[ChatMessage(role="user", content=prompt)],
            temperature=temperature,
            context=context,
        )

    @property
    def prompt(self) -> str:
        return next(message.content for message in self.messages if message.role == "user")

    def to_payload(self) -> dict:
        """Wire body for POST /chat/completions"""
        return self.model_dump(exclude_none=True)


class ParseStatus(str, Enum):
    """How a link reply was parsed"""
    CLEAN = "Clean"
    REPAIRED_KEYS = "RepairedKeys"
    INVALID_ID = "InvalidId"
    UNPARSEABLE = "Unparseable"


class LinkReply(BaseModel):
    """Parsed normalization reply"""

    model_config = ConfigDict(frozen=True)

    best_match: str = ""
    id: Optional[str] = None
    id_valid: bool = False
    parse_status: ParseStatus
    raw_text: str

    @model_validator(mode="after")
    def validate_clean(self) -> "LinkReply":
        if self.parse_status == ParseStatus.CLEAN and not (self.id_valid and self.best_match):
            raise ValueError("A clean reply needs a valid ID and a best match")
        return self


class MockPolicy(str, Enum):
    """Deterministic reply policies of the offline chat backend"""
    FIRST_CANDIDATE = "first-candidate"
    HIGHEST_COSINE = "highest-cosine"
    EXACT_SURFACE_ELSE_HIGHEST_COSINE = "exact-surface"
    FIXED_TABLE = "fixed-table"
