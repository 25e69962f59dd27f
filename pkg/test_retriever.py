import numpy as np
import pytest

from ontonorm.core.exceptions import DimensionMismatchException, IndexBuildException
from ontonorm.models.embedding import EmbeddingMatrix
from ontonorm.models.ontology import ConceptRecord
from ontonorm.services.ontology import build_entry_table
from ontonorm.services.retriever import TermIndex, brute_force_top_k, build_index, exact_match, top_k

DIMS = (8, 64, 768)
N_FIXTURES = 1000


def _unit_rows(rng, n, dim):
    rows = rng.standard_normal((n, dim))
    rows /= np.linalg.norm(rows, axis=1, keepdims=True)
    return rows.astype(np.float32)


def _random_fixture(rng, dim):
    n_concepts = int(rng.integers(1, 13 if dim > 64 else 25))
    concepts = []
    for i in range(n_concepts):
        synonyms = tuple(f"s{int(rng.integers(0, 5))}" for _ in range(int(rng.integers(0, 3))))
        concepts.append(ConceptRecord(id=f"HP:{i + 1:07d}", label=f"t{i:03d}", synonyms=synonyms))
    table = build_entry_table(concepts)

    rows = _unit_rows(rng, len(table), dim)
    for j in range(1, len(rows)):
        if rng.random() < 0.2:
            rows[j] = rows[int(rng.integers(0, j))]
    matrix = EmbeddingMatrix(rows=rows)

    if rng.random() < 0.3:
        query = rows[int(rng.integers(0, len(rows)))].astype(np.float64)
    else:
        query = rng.standard_normal(dim)
    return table, matrix, query


def test_top_k_equals_brute_force_oracle():
    rng = np.random.default_rng(20240701)
    for n in range(N_FIXTURES):
        table, matrix, query = _random_fixture(rng, DIMS[n % len(DIMS)])
        index = TermIndex(table, matrix)
        for dedupe in (False, True):
            oracle = brute_force_top_k(table, matrix, query, len(table), dedupe)
            for k in sorted({1, 5, 20, len(table)}):
                assert index.top_k(query, k, dedupe) == oracle[:k], f"fixture {n}, k={k}, dedupe={dedupe}"


def _pair_index(surfaces, ids, rows):
    concepts = [ConceptRecord(id=i, label=s) for s, i in zip(surfaces, ids)]
    return build_index(build_entry_table(concepts), EmbeddingMatrix(rows=np.array(rows, dtype=np.float32)))


def test_ties_break_by_surface_then_id():
    index = _pair_index(
        ["beta", "alpha", "gamma"],
        ["HP:0000003", "HP:0000002", "HP:0000001"],
        [[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
    )
    candidates = top_k(index, [1.0, 0.0], 3)

    assert [c.surface for c in candidates] == ["alpha", "beta", "gamma"]
    assert [c.rank for c in candidates] == [1, 2, 3]
    assert candidates[0].score == candidates[1].score == 1.0


def test_dedupe_keeps_best_entry_per_id():
    table = build_entry_table([
        ConceptRecord(id="HP:0001265", label="Hyporeflexia", synonyms=("Decreased reflexes",)),
        ConceptRecord(id="HP:0001284", label="Areflexia"),
    ])
    rows = np.array([[0.6, 0.8], [1.0, 0.0], [0.0, 1.0]], dtype=np.float32)
    index = build_index(table, EmbeddingMatrix(rows=rows))

    plain = index.top_k([1.0, 0.0], 3)
    deduped = index.top_k([1.0, 0.0], 3, dedupe_by_id=True)

    assert [c.surface for c in plain] == ["Decreased reflexes", "Hyporeflexia", "Areflexia"]
    assert [c.surface for c in deduped] == ["Decreased reflexes", "Areflexia"]
    assert [c.rank for c in deduped] == [1, 2]


def test_k_beyond_table_returns_everything(hpo_index):
    candidates = hpo_index.top_k(np.ones(hpo_index.dim), 500)
    assert len(candidates) == len(hpo_index)
    assert [c.rank for c in candidates] == list(range(1, len(hpo_index) + 1))
    assert all(a.score >= b.score for a, b in zip(candidates, candidates[1:]))


def test_query_is_normalized(hpo_index):
    query = np.arange(1, hpo_index.dim + 1, dtype=np.float64)
    assert hpo_index.top_k(query, 5) == hpo_index.top_k(query * 4.0, 5)


def test_bad_queries_are_rejected(hpo_index):
    with pytest.raises(DimensionMismatchException):
        hpo_index.top_k([1.0, 0.0], 5)
    with pytest.raises(ValueError):
        hpo_index.top_k(np.zeros(hpo_index.dim), 5)
    with pytest.raises(ValueError):
        hpo_index.top_k(np.ones(hpo_index.dim), 0)


def test_misaligned_matrix_is_rejected(entry_table):
    rows = np.eye(4, dtype=np.float32)
    with pytest.raises(IndexBuildException):
        TermIndex(entry_table, EmbeddingMatrix(rows=rows))


@pytest.mark.parametrize(
    "term, surface, onto_id",
    [
        ("HYPOREFLEXIA", "Hyporeflexia", "HP:0001265"),
        ("decreased   REFLEXES", "Decreased reflexes", "HP:0001265"),
        ("foot drop", "Foot drop", "HP:0009027"),
        ("incoordination", "Incoordination", "HP:0001251"),
    ],
)
def test_exact_match(hpo_index, term, surface, onto_id):
    hit = exact_match(hpo_index, term)
    assert (hit.surface, hit.id, hit.score, hit.rank) == (surface, onto_id, 1.0, 1)


def test_exact_match_miss(hpo_index):
    assert exact_match(hpo_index, "clumsy walking") is None
