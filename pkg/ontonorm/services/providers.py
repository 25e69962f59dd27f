"""
Embedding providers

Embeddings are computed out of process. A provider honors the recipe the
stored vectors were built with: mean pooling over the last hidden layer with
padding masked out, inputs truncated at 128 tokens.
"""

import csv
import logging
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Protocol, Sequence, runtime_checkable

import httpx

from ontonorm.core.exceptions import EmbeddingProviderException
from ontonorm.services.retry import RETRYABLE_STATUS, parse_retry_after, retry_policy

logger = logging.getLogger(__name__)

MAX_TOKENS = 128


@runtime_checkable
class EmbeddingProvider(Protocol):
    """Given a batch of strings, return one vector per string, same order"""

    identifier: str

    async def embed(self, texts: Sequence[str]) -> List[List[float]]:
        ...


class ReplayEmbeddingProvider:
    """Provider backed by precomputed vectors keyed by exact string"""

    def __init__(self, vectors: Mapping[str, Sequence[float]], identifier: str = "replay"):
        self.vectors: Dict[str, List[float]] = {key: list(value) for key, value in vectors.items()}
        self.identifier = identifier
        self.calls = 0

    @classmethod
    def from_file(cls, path: Path) -> "ReplayEmbeddingProvider":
        """
        Load a replay file in the embedding-file format

        The id column may be blank; the first row for a surface wins.
        """
        path = Path(path)
        vectors: Dict[str, List[float]] = {}
        with path.open("r", encoding="utf-8", newline="") as f:
            reader = csv.reader(f)
            header = next(reader, None)
            if not header or header[0] != "surface":
                raise EmbeddingProviderException(f"{path}: replay file must start with a 'surface' column")
            offset = 2 if len(header) > 1 and header[1] == "id" else 1
            for i, record in enumerate(reader, start=1):
                if not record or record[0] in vectors:
                    continue
                try:
                    vectors[record[0]] = [float(x) for x in record[offset:]]
                except ValueError as e:
                    raise EmbeddingProviderException(f"{path}: row {i}: {e}", {"row": i})
        logger.info(f"Loaded {len(vectors)} replay vectors from {path}")
        return cls(vectors, identifier=f"replay:{path.name}")

    async def embed(self, texts: Sequence[str]) -> List[List[float]]:
        self.calls += 1
        missing = [text for text in texts if text not in self.vectors]
        if missing:
            raise EmbeddingProviderException(
                f"{len(missing)} string(s) not in {self.identifier}: {missing[:3]!r}",
                {"missing": missing},
            )
        return [self.vectors[text] for text in texts]


class HttpEmbeddingProvider:
    """Provider speaking the OpenAI-compatible embeddings wire shape"""

    def __init__(
        self,
        url: str,
        model: str,
        token: Optional[str] = None,
        timeout: float = 60.0,
        max_retries: int = 3,
        backoff_base: float = 1.0,
        backoff_max: float = 30.0,
        transport: Optional[httpx.AsyncBaseTransport] = None,
    ):
        if not url:
            raise EmbeddingProviderException("Embedding URL not configured (ONTONORM_EMBED_URL)")
        url = url.rstrip("/")
        self.url = url if url.endswith("/embeddings") else f"{url}/embeddings"
        self.model = model
        self.token = token
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.backoff_max = backoff_max
        self.transport = transport
        self.identifier = f"http:{model}"
        self.retry_count = 0

    def _count_retry(self) -> None:
        self.retry_count += 1

    async def _post(self, client: httpx.AsyncClient, texts: Sequence[str]) -> List[List[float]]:
        headers = {"Authorization": f"Bearer {self.token}"} if self.token else {}
        try:
            response = await client.post(self.url, json={"model": self.model, "input": list(texts)}, headers=headers)
        except httpx.TransportError as e:
            raise EmbeddingProviderException(f"Embedding request failed: {str(e)}", retryable=True)

        if response.status_code in RETRYABLE_STATUS:
            raise EmbeddingProviderException(
                f"Embedding service returned {response.status_code}",
                retryable=True,
                retry_after=parse_retry_after(response.headers.get("retry-after")),
            )
        if response.status_code >= 400:
            raise EmbeddingProviderException(
                f"Embedding service returned {response.status_code}", {"body": response.text[:500]}
            )

        try:
            data = response.json()["data"]
            ordered = sorted(data, key=lambda item: item["index"])
            return [[float(x) for x in item["embedding"]] for item in ordered]
        except (ValueError, KeyError, TypeError) as e:
            raise EmbeddingProviderException(f"Malformed embedding reply: {str(e)}")

    async def embed(self, texts: Sequence[str]) -> List[List[float]]:
        async with httpx.AsyncClient(timeout=self.timeout, transport=self.transport) as client:
            async for attempt in retry_policy(
                self.max_retries, self.backoff_base, self.backoff_max, "embeddings", self._count_retry
            ):
                with attempt:
                    return await self._post(client, texts)
        raise EmbeddingProviderException("Embedding retries exhausted")
