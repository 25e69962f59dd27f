"""
OMIM API integration service
"""

import asyncio
import json
import logging
import re
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import httpx

from ontonorm.core.config import Settings
from ontonorm.core.exceptions import (
    OmimAuthException,
    OmimQuotaException,
    OmimTransportException,
    UsageException,
)
from ontonorm.core.files import atomic_write
from ontonorm.models.ingest import ClinicalDocument, FetchReport, SkipRecord
from ontonorm.services.retry import retry_policy

logger = logging.getLogger(__name__)

CLINICAL_FEATURES = "clinicalFeatures"
_MIM = re.compile(r"^\d{6}$")


def validate_mim_numbers(mim_numbers: Sequence[str]) -> List[str]:
    bad = [m for m in mim_numbers if not _MIM.match(str(m).strip())]
    if bad:
        raise UsageException(f"MIM numbers must have 6 digits: {bad[:5]}", {"invalid": bad})
    return [str(m).strip() for m in mim_numbers]


def document_from_entry(mim_number: str, payload: Dict[str, Any]) -> Union[ClinicalDocument, SkipRecord]:
    """Clinical-features document from an entry reply, or a skip record"""
    entries = (payload.get("omim") or {}).get("entryList") or []
    if not entries:
        return SkipRecord(mim_number=mim_number, reason="no entry returned")
    entry = entries[0].get("entry") or {}
    title = ((entry.get("titles") or {}).get("preferredTitle") or "").strip()
    for item in entry.get("textSectionList") or []:
        section = item.get("textSection") or {}
        if section.get("textSectionName") == CLINICAL_FEATURES:
            text = (section.get("textSectionContent") or "").strip()
            if text:
                return ClinicalDocument(
                    mim_number=mim_number,
                    title=title,
                    clinical_features_text=text,
                    fetched_at=datetime.now(timezone.utc),
                )
    return SkipRecord(mim_number=mim_number, reason="no clinicalFeatures section")


class OmimClient:
    """OMIM entry API client with an on-disk reply cache"""

    def __init__(
        self,
        api_key: Optional[str],
        base_url: str = "https://api.omim.org/api",
        cache_dir: Path = Path(".omim_cache"),
        timeout: float = 60.0,
        max_retries: int = 3,
        backoff_base: float = 1.0,
        backoff_max: float = 30.0,
        concurrency: int = 1,
        transport: Optional[httpx.AsyncBaseTransport] = None,
    ):
        self.api_key = api_key
        self.base_url = base_url.rstrip("/")
        self.cache_dir = Path(cache_dir)
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.backoff_max = backoff_max
        self.concurrency = concurrency
        self.transport = transport
        self.network_calls = 0
        self.retry_count = 0

    @classmethod
    def from_settings(cls, settings: Settings, transport: Optional[httpx.AsyncBaseTransport] = None) -> "OmimClient":
        return cls(
            api_key=settings.omim_key.get_secret_value() if settings.omim_key else None,
            base_url=settings.omim_base_url,
            cache_dir=settings.omim_cache_dir,
            timeout=settings.request_timeout,
            max_retries=settings.max_retries,
            backoff_base=settings.backoff_base,
            backoff_max=settings.backoff_max,
            concurrency=settings.omim_concurrency,
            transport=transport,
        )

    def cache_path(self, mim_number: str) -> Path:
        return self.cache_dir / f"{mim_number}.json"

    def _count_retry(self) -> None:
        self.retry_count += 1

    async def _get(self, client: httpx.AsyncClient, mim_number: str) -> Dict[str, Any]:
        params = {
            "mimNumber": mim_number,
            "include": f"text:{CLINICAL_FEATURES}",
            "format": "json",
            "apiKey": self.api_key,
        }
        self.network_calls += 1
        try:
            response = await client.get(f"{self.base_url}/entry", params=params)
        except httpx.TransportError as e:
            raise OmimTransportException(f"OMIM request failed: {str(e)}", {"mim_number": mim_number})

        if response.status_code in (401, 403):
            raise OmimAuthException(
                f"OMIM rejected the API key ({response.status_code}); check ONTONORM_OMIM_KEY",
                {"status": response.status_code},
            )
        if response.status_code == 429:
            raise OmimQuotaException("OMIM quota exhausted; wait for the quota to reset before re-running")
        if response.status_code >= 500 or response.status_code == 408:
            raise OmimTransportException(
                f"OMIM returned {response.status_code}", {"mim_number": mim_number, "status": response.status_code}
            )
        if response.status_code == 404:
            return {"omim": {"entryList": []}}
        if response.status_code >= 400:
            raise OmimTransportException(f"OMIM returned {response.status_code}", {"mim_number": mim_number})
        try:
            return response.json()
        except ValueError as e:
            raise OmimTransportException(f"OMIM reply for {mim_number} is not JSON: {str(e)}")

    async def fetch_entry(self, client: httpx.AsyncClient, mim_number: str) -> Dict[str, Any]:
        """Entry reply for one MIM number, from the cache when present"""
        path = self.cache_path(mim_number)
        if path.exists():
            return json.loads(path.read_text(encoding="utf-8"))
        if not self.api_key:
            raise OmimAuthException("OMIM API key not configured; set ONTONORM_OMIM_KEY")

        async for attempt in retry_policy(
            self.max_retries, self.backoff_base, self.backoff_max, f"omim {mim_number}", self._count_retry
        ):
            with attempt:
                payload = await self._get(client, mim_number)

        with atomic_write(path) as f:
            json.dump(payload, f, ensure_ascii=False, sort_keys=True)
        return payload

    async def fetch_clinical_features(self, mim_numbers: Sequence[str]) -> FetchReport:
        """
        Fetch clinical-features documents, in input order

        Raises:
            OmimAuthException: Key missing or rejected
            OmimQuotaException: Quota exhausted
            OmimTransportException: Still failing after retries
        """
        mim_numbers = validate_mim_numbers(mim_numbers)
        limit = asyncio.Semaphore(self.concurrency)
        calls_before = self.network_calls

        async with httpx.AsyncClient(timeout=self.timeout, transport=self.transport) as client:

            async def one(mim_number: str):
                async with limit:
                    return document_from_entry(mim_number, await self.fetch_entry(client, mim_number))

            outcomes = await asyncio.gather(*(one(m) for m in mim_numbers))

        report = FetchReport(network_calls=self.network_calls - calls_before)
        for outcome in outcomes:
            if isinstance(outcome, ClinicalDocument):
                report.documents.append(outcome)
            else:
                logger.warning(f"Skipping MIM {outcome.mim_number}: {outcome.reason}")
                report.skipped.append(outcome)
        logger.info(
            f"Fetched {len(report.documents)} documents, skipped {len(report.skipped)}, "
            f"{report.network_calls} network call(s)"
        )
        return report


async def fetch_clinical_features(
    mim_numbers: Sequence[str],
    settings: Settings,
    transport: Optional[httpx.AsyncBaseTransport] = None,
) -> FetchReport:
    return await OmimClient.from_settings(settings, transport).fetch_clinical_features(mim_numbers)
