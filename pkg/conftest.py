"""
Shared test fixtures: the HPO excerpt, seeded embeddings and a constructed index
"""

import csv
import math
from pathlib import Path
from typing import Dict, List, Sequence

import numpy as np
import pytest

from ontonorm.models.embedding import EmbeddingMatrix
from ontonorm.models.ontology import ConceptRecord, EntryTable
from ontonorm.services.ontology import build_entry_table, load_entry_table
from ontonorm.services.providers import ReplayEmbeddingProvider
from ontonorm.services.retriever import TermIndex, build_index

FIXTURES = Path(__file__).parent / "fixtures"
HPO_CSV = FIXTURES / "hpo_excerpt.csv"
GOLDEN = FIXTURES / "golden"

HPO_DIM = 16
HPO_SEED = 7


def random_unit_rows(n: int, dim: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    rows = rng.standard_normal((n, dim))
    rows /= np.linalg.norm(rows, axis=1, keepdims=True)
    return rows.astype(np.float32)


def query_vectors(terms: Sequence[str], dim: int = HPO_DIM, seed: int = 11) -> Dict[str, List[float]]:
    rows = random_unit_rows(len(terms), dim, seed)
    return {term: row.tolist() for term, row in zip(terms, rows)}


def make_terms(n: int) -> List[str]:
    return [f"patient finding {i}" for i in range(n)]


def write_replay_file(path: Path, vectors: Dict[str, Sequence[float]]) -> Path:
    dim = len(next(iter(vectors.values())))
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["surface"] + [f"v{i}" for i in range(dim)])
        for surface, vector in vectors.items():
            writer.writerow([surface] + [repr(float(x)) for x in vector])
    return path


@pytest.fixture(scope="session")
def entry_table() -> EntryTable:
    return load_entry_table(HPO_CSV)


@pytest.fixture(scope="session")
def hpo_matrix(entry_table) -> EmbeddingMatrix:
    return EmbeddingMatrix(rows=random_unit_rows(len(entry_table), HPO_DIM, HPO_SEED), provenance="test")


@pytest.fixture(scope="session")
def hpo_index(entry_table, hpo_matrix) -> TermIndex:
    return build_index(entry_table, hpo_matrix)


# Constructed index: cosines to the query axis are known exactly.
# "Ataxic gait" sees Gait disturbance 0.99, Ataxia 0.98, Ataxic gait 0.97,
# Gait ataxia 0.50 and Dysarthria 0.10; "Dysarthric speech" sits on Dysarthria.
GAIT_COSINES = (
    ("Gait ataxia", 0.50),
    ("Ataxic gait", 0.97),
    ("Gait disturbance", 0.99),
    ("Ataxia", 0.98),
    ("Dysarthria", 0.10),
)
GAIT_DIM = len(GAIT_COSINES) + 1


def _gait_rows() -> np.ndarray:
    rows = np.zeros((len(GAIT_COSINES), GAIT_DIM))
    for i, (_, c) in enumerate(GAIT_COSINES):
        rows[i, 0] = c
        rows[i, i + 1] = math.sqrt(1.0 - c * c)
    return rows


@pytest.fixture
def gait_index() -> TermIndex:
    table = build_entry_table([
        ConceptRecord(id="HP:0002066", label="Gait ataxia", synonyms=("Ataxic gait",)),
        ConceptRecord(id="HP:0001288", label="Gait disturbance"),
        ConceptRecord(id="HP:0001251", label="Ataxia"),
        ConceptRecord(id="HP:0001260", label="Dysarthria"),
    ])
    return build_index(table, EmbeddingMatrix(rows=_gait_rows(), provenance="constructed"))


@pytest.fixture
def gait_provider() -> ReplayEmbeddingProvider:
    axis = [1.0] + [0.0] * (GAIT_DIM - 1)
    return ReplayEmbeddingProvider(
        {
            "Ataxic gait": axis,
            "legs and arms": axis,
            "Dysarthric speech": _gait_rows()[4].tolist(),
        },
        identifier="replay:gait",
    )
