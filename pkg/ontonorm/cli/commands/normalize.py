"""
normalize: run one normalization mode over a terms file
"""

import argparse
import asyncio
import logging
from pathlib import Path

from ontonorm.cli.commands.common import (
    add_index_flags,
    add_llm_flags,
    k_value,
    load_index,
    make_chat,
    make_provider,
    require,
)
from ontonorm.core.config import Settings
from ontonorm.core.files import read_terms_file
from ontonorm.models.normalization import NormalizationMode, RunConfig
from ontonorm.services.pipeline import Normalizer

logger = logging.getLogger(__name__)


def add_mode_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--k", type=k_value, help="Candidates shown to the model (1-50, default 20)")
    parser.add_argument(
        "--paper-faithful",
        action="store_true",
        help="Disable production-only behavior such as the exact-match fast path",
    )


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "normalize",
        help="Normalize terms to ontology concepts",
        description="Normalize every term of a terms file with the embed, llm or rag method.",
    )
    parser.add_argument("--terms", type=Path, help="Terms file, one term per line")
    parser.add_argument("--mode", choices=[m.value for m in NormalizationMode], default="rag")
    parser.add_argument("--out", type=Path, help="Results file (JSON lines)")
    parser.add_argument("--resume", action="store_true", help="Skip terms already in <out>.partial")
    add_mode_flags(parser)
    add_index_flags(parser)
    add_llm_flags(parser)
    parser.set_defaults(handler=run)


def build_normalizer(args: argparse.Namespace, settings: Settings, mode: NormalizationMode) -> Normalizer:
    index = provider = chat = None
    if mode != NormalizationMode.LLM:
        index = load_index(args, settings)
        provider = make_provider(args, settings)
    if mode != NormalizationMode.EMBED:
        chat = make_chat(args, settings)
    config = RunConfig.from_settings(
        settings,
        mode,
        embedding_provider=provider.identifier if provider is not None else None,
        chat_backend=chat.identifier if chat is not None else None,
    )
    return Normalizer(
        config,
        index,
        provider,
        chat,
        embed_batch_size=settings.embed_batch_size,
        embed_concurrency=settings.embed_concurrency,
    )


def run(args: argparse.Namespace, settings: Settings) -> int:
    require(args, "terms", "out")
    terms = read_terms_file(args.terms)
    normalizer = build_normalizer(args, settings, NormalizationMode(args.mode))
    outcome = asyncio.run(normalizer.run_batch(terms, args.out, resume=args.resume))
    manifest = outcome.manifest
    logger.info(
        f"{manifest.n_terms} terms normalized ({manifest.n_resumed} resumed, {manifest.n_errors} errors), "
        f"config {manifest.config_hash}"
    )
    return 1 if manifest.n_errors else 0
