"""
Exact top-k cosine retrieval over the entry table
"""

import logging
import math
from collections import defaultdict
from typing import Dict, List, Optional, Sequence

import numpy as np

from ontonorm.core.exceptions import DimensionMismatchException, IndexBuildException
from ontonorm.models.embedding import EmbeddingMatrix
from ontonorm.models.ontology import EntryKind, EntryTable, EntryTerm, fold_surface
from ontonorm.models.retrieval import Candidate
from ontonorm.services.embed_store import unit_vector

logger = logging.getLogger(__name__)


def exact_dot(a: Sequence[float], b: Sequence[float]) -> float:
    """
    Correctly rounded dot product of two float32-valued vectors

    Products of float32 values are exact in float64 and fsum rounds the sum
    once, so the result does not depend on summation order.
    """
    score = math.fsum(x * y for x, y in zip(a, b))
    return max(-1.0, min(1.0, score))


def _sort_key(entry: EntryTerm, score: float):
    return (-score, entry.surface, entry.id)


def _rank(scored: List[tuple], k: int, dedupe_by_id: bool) -> List[Candidate]:
    """scored: (score, entry) pairs, any order"""
    scored.sort(key=lambda pair: _sort_key(pair[1], pair[0]))
    out: List[Candidate] = []
    seen = set()
    for score, entry in scored:
        if dedupe_by_id:
            if entry.id in seen:
                continue
            seen.add(entry.id)
        out.append(Candidate(surface=entry.surface, id=entry.id, score=score, rank=len(out) + 1))
        if len(out) == k:
            break
    return out


class TermIndex:
    """Entry table plus aligned embeddings, ready for queries"""

    def __init__(self, table: EntryTable, matrix: EmbeddingMatrix):
        if len(table) == 0:
            raise IndexBuildException("Cannot build an index over an empty entry table")
        if len(matrix) != len(table):
            raise IndexBuildException(
                f"Embedding matrix has {len(matrix)} rows for {len(table)} entry terms",
                {"rows": len(matrix), "entries": len(table)},
            )
        self.table = table
        self.matrix = matrix

        lookup: Dict[str, List[int]] = defaultdict(list)
        for i, entry in enumerate(table.entries):
            lookup[fold_surface(entry.surface)].append(i)
        self.surface_lookup: Dict[str, List[int]] = dict(lookup)

        ids = sorted(table.by_id)
        codes = {onto_id: i for i, onto_id in enumerate(ids)}
        self._id_codes = np.array([codes[entry.id] for entry in table.entries], dtype=np.int64)
        self._n_ids = len(ids)
        # Bound on float32 matrix-vector accumulation error, doubled
        self._margin = 2.0 * matrix.dim * float(np.finfo(np.float32).eps)

    @property
    def dim(self) -> int:
        return self.matrix.dim

    def __len__(self) -> int:
        return len(self.table)

    def _query(self, query: Sequence[float]) -> np.ndarray:
        q = np.asarray(query)
        if q.ndim != 1 or q.shape[0] != self.dim:
            raise DimensionMismatchException(
                f"Query has dimension {q.shape[-1] if q.ndim else 0}, index has {self.dim}",
                {"query": int(q.shape[-1]) if q.ndim else 0, "index": self.dim},
            )
        return unit_vector(q, "query")

    def _shortlist(self, approx: np.ndarray, k: int, dedupe_by_id: bool) -> np.ndarray:
        """Rows that can still reach the exact top k"""
        n = approx.shape[0]
        if dedupe_by_id:
            best = np.full(self._n_ids, -np.inf)
            np.maximum.at(best, self._id_codes, approx)
            if k >= self._n_ids:
                return np.arange(n)
            kth = np.partition(best, self._n_ids - k)[self._n_ids - k]
        else:
            if k >= n:
                return np.arange(n)
            kth = np.partition(approx, n - k)[n - k]
        return np.flatnonzero(approx >= kth - self._margin)

    def top_k(self, query: Sequence[float], k: int, dedupe_by_id: bool = False) -> List[Candidate]:
        """
        The k entries with the largest cosine to the query

        Candidates are sorted by (score desc, surface asc, id asc). A float32
        pass picks a shortlist; shortlisted rows are rescored exactly.

        Args:
            query: Query vector, any non-zero length-D vector
            k: Number of candidates (all entries when k >= table size)
            dedupe_by_id: Keep only the best entry per ontology ID

        Returns:
            Ranked candidates, ranks 1..k
        """
        if k < 1:
            raise ValueError("k must be at least 1")
        q = self._query(query)
        approx = self.matrix.rows @ q
        rows = self._shortlist(approx, k, dedupe_by_id)

        q64 = q.astype(np.float64)
        products = self.matrix.rows[rows].astype(np.float64) * q64
        scored = [
            (max(-1.0, min(1.0, math.fsum(product))), self.table.entries[i])
            for i, product in zip(rows.tolist(), products.tolist())
        ]
        return _rank(scored, k, dedupe_by_id)

    def exact_match(self, raw_term: str) -> Optional[Candidate]:
        """
        Entry whose folded surface equals the folded term

        Prefers a PrimaryLabel, then the lowest ID.
        """
        hits = self.surface_lookup.get(fold_surface(raw_term))
        if not hits:
            return None
        entries = self.table.entries
        best = min(
            hits,
            key=lambda i: (entries[i].kind != EntryKind.PRIMARY_LABEL, entries[i].id, i),
        )
        entry = entries[best]
        return Candidate(surface=entry.surface, id=entry.id, score=1.0, rank=1)


def build_index(table: EntryTable, matrix: EmbeddingMatrix) -> TermIndex:
    """Build a query-ready index; alignment is checked here"""
    index = TermIndex(table, matrix)
    logger.info(f"Index ready: {len(index)} entry terms, dimension {index.dim}")
    return index


def top_k(index: TermIndex, query: Sequence[float], k: int, dedupe_by_id: bool = False) -> List[Candidate]:
    return index.top_k(query, k, dedupe_by_id)


def exact_match(index: TermIndex, raw_term: str) -> Optional[Candidate]:
    return index.exact_match(raw_term)


def brute_force_top_k(
    table: EntryTable,
    matrix: EmbeddingMatrix,
    query: Sequence[float],
    k: int,
    dedupe_by_id: bool = False,
) -> List[Candidate]:
    """Reference top-k: scalar loop over every row, full sort, truncate"""
    if k < 1:
        raise ValueError("k must be at least 1")
    if len(table) == 0 or len(matrix) != len(table):
        raise IndexBuildException("Entry table and embedding matrix are not aligned")
    q = np.asarray(query)
    if q.ndim != 1 or q.shape[0] != matrix.dim:
        raise DimensionMismatchException(f"Query has dimension {q.shape[-1]}, matrix has {matrix.dim}")
    q_values = unit_vector(q, "query").tolist()

    scored = []
    for entry, row in zip(table.entries, matrix.rows):
        scored.append((exact_dot(row.tolist(), q_values), entry))
    return _rank(scored, k, dedupe_by_id)
