"""
Flags and builders shared by the commands
"""

import argparse
import logging
from pathlib import Path
from typing import Any, Dict, List

from ontonorm.core.config import MAX_CANDIDATES, Settings
from ontonorm.core.exceptions import ConfigurationException, UsageException
from ontonorm.models.llm import MockPolicy
from ontonorm.services.embed_store import load_embedding_file
from ontonorm.services.llm_client import ChatBackend, ChatClient
from ontonorm.services.mock_llm import MockChatClient, load_reply_table
from ontonorm.services.ontology import load_entry_table, read_entry_table
from ontonorm.services.providers import EmbeddingProvider, HttpEmbeddingProvider, ReplayEmbeddingProvider
from ontonorm.services.retriever import TermIndex, build_index

logger = logging.getLogger(__name__)

INDEX_ENTRIES = "entries.tsv"
INDEX_EMBEDDINGS = "embeddings.csv"
INDEX_META = "index.json"


def k_value(text: str) -> int:
    """argparse type for candidate-pool sizes"""
    try:
        k = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"k must be an integer, got {text!r}")
    if not 1 <= k <= MAX_CANDIDATES:
        raise argparse.ArgumentTypeError(f"k must be between 1 and {MAX_CANDIDATES}, got {k}")
    return k


def k_list(text: str) -> List[int]:
    """argparse type for comma-separated k values"""
    ks = [k_value(part.strip()) for part in text.split(",") if part.strip()]
    if not ks:
        raise argparse.ArgumentTypeError("give at least one k")
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise argparse.ArgumentTypeError("k values must be strictly ascending")
    return ks


def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def threshold_value(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not 0.0 < value <= 1.0:
        raise argparse.ArgumentTypeError(f"threshold must be in (0, 1], got {value}")
    return value


def add_index_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("index")
    group.add_argument("--index", type=Path, help="Index directory written by build-index")
    group.add_argument("--ontology", type=Path, help="BioPortal HP CSV (with --embeddings, instead of --index)")
    group.add_argument("--embeddings", type=Path, help="Entry embedding file aligned with the ontology")
    group.add_argument(
        "--query-embeddings",
        type=Path,
        help="Embedding-format file replayed as the query provider (default: ONTONORM_EMBED_URL)",
    )


def add_llm_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("chat backend")
    group.add_argument("--model", help="Chat model name")
    group.add_argument("--base-url", help="OpenAI-compatible base URL")
    group.add_argument(
        "--mock",
        choices=[policy.value for policy in MockPolicy],
        help="Use the offline mock backend with this policy",
    )
    group.add_argument("--mock-table", type=Path, help="JSON reply table for the mock backend")
    group.add_argument("--concurrency", type=positive_int, help="Requests in flight")


def settings_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """Settings fields set on the command line; absent flags stay None"""
    return {
        "model": getattr(args, "model", None),
        "base_url": getattr(args, "base_url", None),
        "concurrency": getattr(args, "concurrency", None),
        "k": getattr(args, "k", None),
        "paper_faithful": True if getattr(args, "paper_faithful", False) else None,
        "cosine_threshold": getattr(args, "threshold", None),
        "omim_cache_dir": getattr(args, "cache_dir", None),
    }


def require(args: argparse.Namespace, *names: str) -> None:
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n, None) is None]
    if missing:
        raise UsageException(f"{args.command} needs {', '.join(missing)}")


def load_index(args: argparse.Namespace, settings: Settings) -> TermIndex:
    """Index from --index, or from --ontology plus --embeddings"""
    if args.index is not None:
        table = read_entry_table(args.index / INDEX_ENTRIES)
        matrix = load_embedding_file(args.index / INDEX_EMBEDDINGS, table)
    elif args.ontology is not None and args.embeddings is not None:
        table = load_entry_table(
            args.ontology,
            synonym_delimiter=settings.synonym_delimiter,
            include_obsolete=settings.include_obsolete,
        )
        matrix = load_embedding_file(args.embeddings, table)
    else:
        raise UsageException(f"{args.command} needs --index, or --ontology with --embeddings")
    return build_index(table, matrix)


def make_provider(args: argparse.Namespace, settings: Settings) -> EmbeddingProvider:
    """Query embedding provider: replay file, else the configured HTTP provider"""
    replay = getattr(args, "query_embeddings", None)
    if replay is not None:
        return ReplayEmbeddingProvider.from_file(replay)
    if settings.embed_url:
        return HttpEmbeddingProvider(
            url=settings.embed_url,
            model=settings.embed_model,
            token=settings.embed_token.get_secret_value() if settings.embed_token else None,
            timeout=settings.request_timeout,
            max_retries=settings.max_retries,
            backoff_base=settings.backoff_base,
            backoff_max=settings.backoff_max,
        )
    raise ConfigurationException("No query embeddings: pass --query-embeddings or set ONTONORM_EMBED_URL")


def make_chat(args: argparse.Namespace, settings: Settings) -> ChatBackend:
    """Mock backend when --mock is given, else the configured endpoint"""
    if getattr(args, "mock", None):
        table = load_reply_table(args.mock_table) if args.mock_table else None
        return MockChatClient(MockPolicy(args.mock), table)
    if getattr(args, "mock_table", None):
        raise UsageException("--mock-table needs --mock")
    return ChatClient.from_settings(settings)
