"""
Retry policy shared by the HTTP clients
"""

import logging
from datetime import datetime, timezone
from email.utils import parsedate_to_datetime
from typing import Callable, Optional

from tenacity import (
    AsyncRetrying,
    RetryCallState,
    retry_if_exception,
    stop_after_attempt,
    wait_exponential,
)

from ontonorm.core.exceptions import (
    EmbeddingProviderException,
    LLMTransportException,
    OmimTransportException,
)

logger = logging.getLogger(__name__)

RETRYABLE_STATUS = {408, 409, 429, 500, 502, 503, 504}


def is_transient(exc: BaseException) -> bool:
    """Exceptions the clients raise for timeouts, 429 and 5xx replies"""
    if isinstance(exc, (LLMTransportException, OmimTransportException)):
        return True
    return isinstance(exc, EmbeddingProviderException) and exc.retryable


def parse_retry_after(value: Optional[str]) -> Optional[float]:
    """Parse a Retry-After header given in seconds or as an HTTP date"""
    if not value:
        return None
    value = value.strip()
    try:
        return max(0.0, float(value))
    except ValueError:
        pass
    try:
        when = parsedate_to_datetime(value)
    except (TypeError, ValueError):
        return None
    if when.tzinfo is None:
        when = when.replace(tzinfo=timezone.utc)
    return max(0.0, (when - datetime.now(timezone.utc)).total_seconds())


class wait_retry_after:
    """Wait what the server asked for, else back off exponentially"""

    def __init__(self, backoff_base: float, backoff_max: float):
        self.backoff_max = backoff_max
        self.fallback = wait_exponential(multiplier=backoff_base, max=backoff_max)

    def __call__(self, retry_state: RetryCallState) -> float:
        exc = retry_state.outcome.exception() if retry_state.outcome else None
        retry_after = getattr(exc, "retry_after", None)
        if retry_after is not None:
            return min(float(retry_after), self.backoff_max)
        return self.fallback(retry_state)


def retry_policy(
    max_retries: int,
    backoff_base: float,
    backoff_max: float,
    name: str,
    on_retry: Optional[Callable[[], None]] = None,
) -> AsyncRetrying:
    """
    Build the retry loop used around one HTTP request

    Args:
        max_retries: Retries after the first attempt
        backoff_base: Exponential backoff multiplier in seconds
        backoff_max: Upper bound for a single wait
        name: Label used in log lines
        on_retry: Callback invoked before each retry (retry accounting)

    Returns:
        AsyncRetrying that re-raises the last exception when exhausted
    """

    def before_sleep(retry_state: RetryCallState) -> None:
        exc = retry_state.outcome.exception() if retry_state.outcome else None
        logger.warning(f"{name}: attempt {retry_state.attempt_number} failed ({exc}); retrying")
        if on_retry is not None:
            on_retry()

    return AsyncRetrying(
        stop=stop_after_attempt(max_retries + 1),
        wait=wait_retry_after(backoff_base, backoff_max),
        retry=retry_if_exception(is_transient),
        before_sleep=before_sleep,
        reraise=True,
    )
