"""
ingest-omim and extract: building a terms file from OMIM clinical features
"""

import argparse
import asyncio
import logging
from pathlib import Path

from ontonorm.cli.commands.common import add_llm_flags, make_chat, require
from ontonorm.core.config import Settings
from ontonorm.core.files import read_terms_file, write_terms_file
from ontonorm.services.extraction import (
    apply_exclusions,
    extract_all,
    load_exclusions,
    read_documents,
    write_documents,
    write_signs,
)
from ontonorm.services.omim import OmimClient

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    fetch = subparsers.add_parser(
        "ingest-omim",
        help="Fetch OMIM clinical-features text",
        description="Fetch the clinicalFeatures section for each MIM number (key from ONTONORM_OMIM_KEY); "
        "replies are cached per MIM number so re-runs need no network.",
    )
    fetch.add_argument("--mim-file", type=Path, help="MIM numbers, one per line")
    fetch.add_argument("--cache-dir", type=Path, help="Reply cache directory (default .omim_cache)")
    fetch.add_argument("--out", type=Path, help="Documents file (JSON lines)")
    fetch.set_defaults(handler=run_ingest)

    extract = subparsers.add_parser(
        "extract",
        help="Extract signs and write the terms to normalize",
        description="Extract signs from each document with the extraction prompt, drop curated malformed "
        "terms and write one term per line. Also writes <out>.signs.jsonl and <out>.dropped.txt.",
    )
    extract.add_argument("--documents", type=Path, help="Documents file from ingest-omim")
    extract.add_argument(
        "--exclusions",
        type=Path,
        help="Malformed-term list, one per line (default: the nine published examples)",
    )
    extract.add_argument("--out", type=Path, help="Terms file to write")
    add_llm_flags(extract)
    extract.set_defaults(handler=run_extract)


def run_ingest(args: argparse.Namespace, settings: Settings) -> int:
    require(args, "mim_file", "out")
    client = OmimClient.from_settings(settings)
    report = asyncio.run(client.fetch_clinical_features(read_terms_file(args.mim_file)))
    write_documents(report.documents, args.out)
    return 0


def run_extract(args: argparse.Namespace, settings: Settings) -> int:
    require(args, "documents", "out")
    docs = read_documents(args.documents)
    exclusions = load_exclusions(args.exclusions)
    backend = make_chat(args, settings)
    extracted, failures = asyncio.run(
        extract_all(docs, backend, settings.model, settings.extract_attempts, settings.concurrency)
    )
    for mim_number, message in failures.items():
        logger.error(f"Extraction failed for MIM {mim_number}: {message}")

    signs = [sign for item in extracted for sign in item.signs]
    kept, dropped = apply_exclusions(signs, exclusions)
    out: Path = args.out
    write_signs(extracted, Path(f"{out}.signs.jsonl"))
    write_terms_file(dropped, Path(f"{out}.dropped.txt"))
    write_terms_file(kept, out)
    logger.info(f"{len(signs)} signs extracted, {len(dropped)} excluded, {len(kept)} terms written to {out}")
    return 1 if failures else 0
