"""
Embedding models
"""

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

# Stored vectors are unit length within this tolerance
NORM_TOLERANCE = 1e-5


class EmbeddingMatrix(BaseModel):
    """Unit-normalized float32 vectors aligned 1:1 with an entry table"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    rows: np.ndarray
    provenance: str = "unknown"

    @field_validator("rows")
    @classmethod
    def validate_rows(cls, v: np.ndarray) -> np.ndarray:
        if v.ndim != 2 or v.shape[1] == 0:
            raise ValueError("Embedding rows must form a non-empty 2-D array")
        if v.dtype != np.float32:
            v = v.astype(np.float32)
        if not np.all(np.isfinite(v)):
            raise ValueError("Embedding rows must be finite")
        v = v.copy()
        v.flags.writeable = False
        return v

    @model_validator(mode="after")
    def validate_norms(self) -> "EmbeddingMatrix":
        norms = np.linalg.norm(self.rows.astype(np.float64), axis=1)
        bad = np.flatnonzero(np.abs(norms - 1.0) > NORM_TOLERANCE)
        if bad.size:
            raise ValueError(f"Row {int(bad[0]) + 1} is not unit length (norm {norms[bad[0]]:.6f})")
        return self

    @property
    def dim(self) -> int:
        return int(self.rows.shape[1])

    def __len__(self) -> int:
        return int(self.rows.shape[0])
