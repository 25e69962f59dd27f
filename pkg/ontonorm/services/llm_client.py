"""
OpenAI-compatible chat-completions client
"""

import asyncio
import logging
from typing import List, Optional, Protocol, runtime_checkable

import httpx

from ontonorm.core.config import Settings
from ontonorm.core.exceptions import (
    LLMAuthException,
    LLMReplyException,
    LLMRetriesExhaustedException,
    LLMTransportException,
)
from ontonorm.models.llm import ChatRequest
from ontonorm.services.retry import RETRYABLE_STATUS, parse_retry_after, retry_policy

logger = logging.getLogger(__name__)


@runtime_checkable
class ChatBackend(Protocol):
    """Anything that answers a ChatRequest with the assistant text"""

    identifier: str
    retry_count: int

    async def complete(self, request: ChatRequest) -> str:
        ...


class ChatClient:
    """Chat-completions client for any OpenAI-compatible endpoint"""

    def __init__(
        self,
        base_url: str,
        token: Optional[str] = None,
        timeout: float = 60.0,
        max_retries: int = 3,
        backoff_base: float = 1.0,
        backoff_max: float = 30.0,
        concurrency: int = 4,
        transport: Optional[httpx.AsyncBaseTransport] = None,
    ):
        if not base_url:
            raise LLMTransportException("Chat base URL not configured (ONTONORM_BASE_URL)")
        self.url = f"{base_url.rstrip('/')}/chat/completions"
        self.token = token
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.backoff_max = backoff_max
        self.transport = transport
        self.identifier = f"http:{base_url.rstrip('/')}"
        self.retry_count = 0
        self._limit = asyncio.Semaphore(concurrency)

    @classmethod
    def from_settings(
        cls, settings: Settings, transport: Optional[httpx.AsyncBaseTransport] = None
    ) -> "ChatClient":
        """Client for the configured endpoint; the token must be in the environment"""
        if settings.llm_token is None:
            raise LLMAuthException("Chat endpoint token not configured; set ONTONORM_LLM_TOKEN")
        return cls(
            base_url=settings.base_url,
            token=settings.llm_token.get_secret_value(),
            timeout=settings.request_timeout,
            max_retries=settings.max_retries,
            backoff_base=settings.backoff_base,
            backoff_max=settings.backoff_max,
            concurrency=settings.concurrency,
            transport=transport,
        )

    def _count_retry(self) -> None:
        self.retry_count += 1

    async def _post(self, client: httpx.AsyncClient, request: ChatRequest) -> str:
        headers = {"Authorization": f"Bearer {self.token}"} if self.token else {}
        try:
            response = await client.post(self.url, json=request.to_payload(), headers=headers)
        except httpx.TransportError as e:
            raise LLMTransportException(f"Chat request failed: {str(e)}")

        if response.status_code in (401, 403):
            raise LLMAuthException(
                f"Chat endpoint rejected the credentials ({response.status_code}); check ONTONORM_LLM_TOKEN",
                {"status": response.status_code},
            )
        if response.status_code in RETRYABLE_STATUS:
            raise LLMTransportException(
                f"Chat endpoint returned {response.status_code}",
                {"status": response.status_code},
                retry_after=parse_retry_after(response.headers.get("retry-after")),
            )
        if response.status_code >= 400:
            raise LLMReplyException(
                f"Chat endpoint returned {response.status_code}",
                {"status": response.status_code, "body": response.text[:500]},
            )
        return self._content(response)

    @staticmethod
    def _content(response: httpx.Response) -> str:
        try:
            content = response.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as e:
            raise LLMReplyException(f"Malformed chat reply: {str(e)}", {"body": response.text[:500]})
        # Some servers send null content for empty completions
        return content if isinstance(content, str) else ""

    async def complete(self, request: ChatRequest) -> str:
        """
        Send one request and return the assistant message content

        Timeouts, 429 and 5xx replies are retried with exponential backoff,
        honoring Retry-After.

        Raises:
            LLMAuthException: 401/403, never retried
            LLMRetriesExhaustedException: Still failing after max_retries retries
            LLMReplyException: Body without an assistant message
        """
        async with self._limit:
            async with httpx.AsyncClient(timeout=self.timeout, transport=self.transport) as client:
                try:
                    async for attempt in retry_policy(
                        self.max_retries, self.backoff_base, self.backoff_max, "chat", self._count_retry
                    ):
                        with attempt:
                            return await self._post(client, request)
                except LLMTransportException as e:
                    raise LLMRetriesExhaustedException(
                        f"Chat request failed after {self.max_retries} retries: {e.message}",
                        {**e.details, "retries": self.max_retries},
                    )
        raise LLMRetriesExhaustedException("Chat retries exhausted")

    async def complete_many(self, requests: List[ChatRequest]) -> List[str]:
        """Complete requests concurrently (bounded); replies in request order"""
        return list(await asyncio.gather(*(self.complete(r) for r in requests)))


async def chat_complete(
    settings: Settings,
    request: ChatRequest,
    transport: Optional[httpx.AsyncBaseTransport] = None,
) -> str:
    """One-off completion against the configured endpoint"""
    client = ChatClient.from_settings(settings, transport=transport)
    return await client.complete(request)
