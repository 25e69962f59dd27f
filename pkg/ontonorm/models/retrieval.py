"""
Retrieval models
"""

from pydantic import BaseModel, ConfigDict, Field

from ontonorm.models.ontology import OntoId


class Candidate(BaseModel):
    """Entry term proposed by the retriever"""

    model_config = ConfigDict(frozen=True)

    surface: str
    id: OntoId
    score: float = Field(ge=-1.0, le=1.0)
    rank: int = Field(ge=1)

    def render(self, with_id: bool = True) -> str:
        """Rendering used in the candidate list of the RAG prompt"""
        return f"{self.surface} ({self.id})" if with_id else self.surface
