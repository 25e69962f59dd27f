"""
Embedding store: unit vectors aligned with the entry table, file format and cosine
"""

import asyncio
import csv
import logging
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from ontonorm.core.exceptions import (
    DimensionMismatchException,
    EmbeddingAlignmentException,
    EmbeddingDimensionException,
    EmbeddingLoadException,
    EmbeddingProviderException,
    InvalidIdException,
    ZeroVectorException,
)
from ontonorm.core.files import atomic_write
from ontonorm.models.embedding import EmbeddingMatrix
from ontonorm.models.ontology import EntryTable, normalize_id
from ontonorm.services.providers import EmbeddingProvider

logger = logging.getLogger(__name__)


def unit_vector(values: Sequence[float], label: str = "vector") -> np.ndarray:
    """
    L2-normalize a vector into the stored float32 form

    Raises:
        ValueError: On non-finite components or the zero vector
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError(f"{label} must be a non-empty 1-D vector")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{label} has non-finite components")
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise ValueError(f"{label} is the zero vector")
    return (v / norm).astype(np.float32)


def cosine(a: Sequence[float], b: Sequence[float]) -> float:
    """
    Cosine similarity accumulated in float64

    Raises:
        DimensionMismatchException: When the vectors differ in length
        ZeroVectorException: When either vector is zero
    """
    va = np.asarray(a, dtype=np.float64)
    vb = np.asarray(b, dtype=np.float64)
    if va.shape != vb.shape:
        raise DimensionMismatchException(
            f"Cannot compare vectors of dimension {va.size} and {vb.size}",
            {"left": int(va.size), "right": int(vb.size)},
        )
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise ZeroVectorException(
            "Cosine is undefined for the zero vector",
            {"left_norm": na, "right_norm": nb},
        )
    score = float(np.dot(va, vb)) / (na * nb)
    return max(-1.0, min(1.0, score))


def _read_header(header: List[str], path: Path) -> int:
    if len(header) < 3 or header[0] != "surface" or header[1] != "id":
        raise EmbeddingLoadException(f"{path}: header must start with surface,id,v0", {"row": 0})
    dims = header[2:]
    expected = [f"v{i}" for i in range(len(dims))]
    if dims != expected:
        raise EmbeddingLoadException(f"{path}: vector columns must be named v0..v{len(dims) - 1}", {"row": 0})
    return len(dims)


def load_embedding_file(path: Path, table: EntryTable, provenance: Optional[str] = None) -> EmbeddingMatrix:
    """
    Load an embedding CSV and verify it row-by-row against the entry table

    Args:
        path: CSV with header surface,id,v0,...,v{D-1}
        table: Entry table the rows must follow
        provenance: Provider identifier recorded on the matrix

    Returns:
        EmbeddingMatrix with normalized rows

    Raises:
        EmbeddingAlignmentException: Row count or (surface, id) key mismatch
        EmbeddingLoadException: Malformed, non-finite or zero rows
    """
    path = Path(path)
    rows: List[np.ndarray] = []
    with path.open("r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None:
            raise EmbeddingLoadException(f"{path}: file is empty", {"row": 0})
        dim = _read_header(header, path)

        i = 0
        for record in reader:
            if not any(cell.strip() for cell in record):
                continue
            i += 1
            if i > len(table):
                raise EmbeddingAlignmentException(
                    f"{path}: more rows than the entry table ({len(table)})", {"row": i}
                )
            if len(record) != dim + 2:
                raise EmbeddingLoadException(
                    f"{path}: row {i} has {len(record) - 2} components, expected {dim}", {"row": i}
                )
            entry = table.entries[i - 1]
            try:
                row_id = normalize_id(record[1])
            except InvalidIdException:
                row_id = record[1]
            if record[0] != entry.surface or row_id != entry.id:
                raise EmbeddingAlignmentException(
                    f"{path}: row {i} key ({record[0]!r}, {record[1]}) does not match "
                    f"entry ({entry.surface!r}, {entry.id})",
                    {"row": i},
                )
            try:
                rows.append(unit_vector([float(x) for x in record[2:]], f"row {i}"))
            except ValueError as e:
                raise EmbeddingLoadException(f"{path}: {e}", {"row": i})

    if len(rows) != len(table):
        raise EmbeddingAlignmentException(
            f"{path}: {len(rows)} rows for {len(table)} entry terms", {"row": len(rows) + 1}
        )

    matrix = EmbeddingMatrix(rows=np.vstack(rows), provenance=provenance or f"file:{path.name}")
    logger.info(f"Loaded {len(matrix)} embeddings of dimension {matrix.dim} from {path}")
    return matrix


def write_embedding_file(path: Path, table: EntryTable, matrix: EmbeddingMatrix) -> None:
    """Write the embedding CSV in entry-table order"""
    if len(matrix) != len(table):
        raise EmbeddingAlignmentException(f"{len(matrix)} rows for {len(table)} entry terms")
    with atomic_write(path) as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["surface", "id"] + [f"v{i}" for i in range(matrix.dim)])
        for entry, row in zip(table.entries, matrix.rows):
            writer.writerow([entry.surface, entry.id] + [repr(x) for x in row.tolist()])


async def embed_batch(
    provider: EmbeddingProvider,
    terms: Sequence[str],
    batch_size: int = 64,
    concurrency: int = 2,
) -> List[np.ndarray]:
    """
    Embed strings through a provider and normalize the vectors

    Args:
        provider: Embedding provider
        terms: Non-empty strings
        batch_size: Strings per provider call
        concurrency: Provider calls in flight

    Returns:
        One unit float32 vector per term, input order

    Raises:
        EmbeddingProviderException: Transport failure or a broken vector
        EmbeddingDimensionException: Vectors of different lengths in one batch
    """
    if not terms:
        raise ValueError("embed_batch needs at least one term")
    if any(not isinstance(t, str) or not t.strip() for t in terms):
        raise ValueError("embed_batch terms must be non-empty strings")

    semaphore = asyncio.Semaphore(concurrency)
    chunks = [list(terms[i:i + batch_size]) for i in range(0, len(terms), batch_size)]

    async def run(chunk: List[str]):
        async with semaphore:
            vectors = await provider.embed(chunk)
        if len(vectors) != len(chunk):
            raise EmbeddingProviderException(
                f"{provider.identifier} returned {len(vectors)} vectors for {len(chunk)} inputs"
            )
        return vectors

    results = await asyncio.gather(*(run(chunk) for chunk in chunks))

    out: List[np.ndarray] = []
    dim: Optional[int] = None
    for term, raw in zip(terms, (v for vectors in results for v in vectors)):
        size = len(raw)
        if dim is None:
            dim = size
        elif size != dim:
            raise EmbeddingDimensionException(
                f"{provider.identifier} returned dimension {size} for {term!r}, expected {dim}",
                {"term": term, "dim": size, "expected": dim},
            )
        try:
            out.append(unit_vector(raw, f"embedding of {term!r}"))
        except ValueError as e:
            raise EmbeddingProviderException(f"{provider.identifier}: {e}", {"term": term})

    logger.debug(f"Embedded {len(out)} strings via {provider.identifier}")
    return out


async def compute_entry_embeddings(
    provider: EmbeddingProvider,
    table: EntryTable,
    batch_size: int = 64,
    concurrency: int = 2,
) -> EmbeddingMatrix:
    """Embed every entry surface, in table order"""
    vectors = await embed_batch(provider, [entry.surface for entry in table.entries], batch_size, concurrency)
    return EmbeddingMatrix(rows=np.vstack(vectors), provenance=provider.identifier)
