"""
Evaluation models and schemas
"""

from enum import Enum
from typing import Dict, List, Optional

from pydantic import BaseModel, Field, model_validator

from ontonorm.models.ontology import OntoId


class Outcome(str, Enum):
    """Confusion class of one scored term"""
    TP = "TP"
    FP = "FP"
    FN = "FN"
    EXCLUDED = "Excluded"


class TierUsed(str, Enum):
    """Equivalence tier that decided a verdict"""
    COSINE_ONLY = "CosineOnly"
    LLM_JUDGE = "LlmJudge"
    HUMAN = "Human"


class GoldRecord(BaseModel):
    """Expected normalization of one term"""

    term: str
    gold_id: Optional[OntoId] = None
    gold_surface: Optional[str] = None
    malformed: bool = False

    @model_validator(mode="after")
    def validate_gold(self) -> "GoldRecord":
        if not self.malformed and self.gold_id is None:
            raise ValueError(f"Gold record for {self.term!r} needs a gold_id unless malformed")
        return self


class EquivalenceVerdict(BaseModel):
    """Semantic-equivalence judgment of (term, chosen surface)"""

    cosine_score: Optional[float] = None
    cosine_verdict: Optional[bool] = None
    llm_verdict: Optional[bool] = None
    human_verdict: Optional[bool] = None
    final: bool = False
    tier_used: TierUsed = TierUsed.COSINE_ONLY

    @classmethod
    def combine(
        cls,
        cosine_score: Optional[float] = None,
        threshold: float = 0.90,
        llm_verdict: Optional[bool] = None,
        human_verdict: Optional[bool] = None,
    ) -> "EquivalenceVerdict":
        """Human > LlmJudge > CosineOnly; nothing at all means not equivalent"""
        cosine_verdict = None if cosine_score is None else cosine_score >= threshold
        if human_verdict is not None:
            final, tier = human_verdict, TierUsed.HUMAN
        elif llm_verdict is not None:
            final, tier = llm_verdict, TierUsed.LLM_JUDGE
        else:
            final, tier = bool(cosine_verdict), TierUsed.COSINE_ONLY
        return cls(
            cosine_score=cosine_score,
            cosine_verdict=cosine_verdict,
            llm_verdict=llm_verdict,
            human_verdict=human_verdict,
            final=final,
            tier_used=tier,
        )

    @model_validator(mode="after")
    def validate_tier(self) -> "EquivalenceVerdict":
        decided_by = {
            TierUsed.HUMAN: self.human_verdict,
            TierUsed.LLM_JUDGE: self.llm_verdict,
            TierUsed.COSINE_ONLY: bool(self.cosine_verdict),
        }[self.tier_used]
        if decided_by != self.final:
            raise ValueError("final must follow the verdict of tier_used")
        return self


class ConfusionCounts(BaseModel):
    """Confusion counts of a scored run"""

    tp: int = Field(default=0, ge=0)
    fp: int = Field(default=0, ge=0)
    fn: int = Field(default=0, ge=0)
    tn: int = Field(default=0, ge=0)
    n_scored: int = Field(default=0, ge=0)
    n_excluded: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def validate_total(self) -> "ConfusionCounts":
        if self.tp + self.fp + self.fn != self.n_scored:
            raise ValueError("tp + fp + fn must equal n_scored")
        return self

    @classmethod
    def of(cls, tp: int = 0, fp: int = 0, fn: int = 0, tn: int = 0, n_excluded: int = 0) -> "ConfusionCounts":
        return cls(tp=tp, fp=fp, fn=fn, tn=tn, n_scored=tp + fp + fn, n_excluded=n_excluded)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


class MetricsReport(BaseModel):
    """The four metrics, full precision plus two-decimal display values"""

    method: str = ""
    counts: ConfusionCounts
    accuracy: float = Field(ge=0.0, le=1.0)
    precision: float = Field(ge=0.0, le=1.0)
    recall: float = Field(ge=0.0, le=1.0)
    f1: float = Field(ge=0.0, le=1.0)
    rounded: Dict[str, str] = {}
    undefined: Dict[str, bool] = {}


class ScoredTerm(BaseModel):
    """Per-term scoring detail"""

    index: int
    term: str
    outcome: Outcome
    chosen_surface: Optional[str] = None
    chosen_id: Optional[str] = None
    gold_id: Optional[str] = None
    verdict: Optional[EquivalenceVerdict] = None


class ScoreReport(BaseModel):
    """Counts plus per-term outcomes"""

    counts: ConfusionCounts
    terms: List[ScoredTerm] = []
    n_errors: int = 0


class SweepPoint(BaseModel):
    """Accuracy at one candidate-pool size"""

    k: int = Field(ge=1)
    accuracy: float
    counts: ConfusionCounts


class DisagreementRow(BaseModel):
    """Term where the RAG choice is not the cosine argmax"""

    term: str
    argmax_surface: str
    argmax_id: str
    argmax_cosine: float
    chosen_surface: Optional[str] = None
    chosen_id: str
    chosen_cosine: Optional[float] = None
    delta: Optional[float] = None
    gold_id: Optional[str] = None
