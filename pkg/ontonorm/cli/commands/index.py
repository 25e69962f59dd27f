"""
build-index: entry table plus aligned embeddings in one directory
"""

import argparse
import asyncio
import logging
from datetime import datetime, timezone
from pathlib import Path

from ontonorm.cli.commands.common import (
    INDEX_EMBEDDINGS,
    INDEX_ENTRIES,
    INDEX_META,
    make_provider,
    require,
)
from ontonorm.core.config import Settings
from ontonorm.core.files import write_json
from ontonorm.services.embed_store import compute_entry_embeddings, load_embedding_file, write_embedding_file
from ontonorm.services.ontology import check_release_counts, load_entry_table, write_entry_table
from ontonorm.services.retriever import build_index

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "build-index",
        help="Expand the ontology and align entry embeddings",
        description="Parse the BioPortal HP CSV, expand synonyms and write an index directory "
        "(entries.tsv, embeddings.csv, index.json).",
    )
    parser.add_argument("--ontology", type=Path, help="BioPortal HP CSV")
    parser.add_argument(
        "--embeddings",
        type=Path,
        help="Precomputed entry embedding file; without it entries are embedded via the provider",
    )
    parser.add_argument("--query-embeddings", type=Path, help="Replay file used as provider when embedding entries")
    parser.add_argument("--out", type=Path, help="Index directory to write")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace, settings: Settings) -> int:
    require(args, "ontology", "out")
    table = load_entry_table(
        args.ontology,
        synonym_delimiter=settings.synonym_delimiter,
        include_obsolete=settings.include_obsolete,
    )
    check_release_counts(table)

    if args.embeddings is not None:
        matrix = load_embedding_file(args.embeddings, table)
    else:
        provider = make_provider(args, settings)
        matrix = asyncio.run(
            compute_entry_embeddings(provider, table, settings.embed_batch_size, settings.embed_concurrency)
        )
    index = build_index(table, matrix)

    out: Path = args.out
    write_entry_table(table, out / INDEX_ENTRIES)
    write_embedding_file(out / INDEX_EMBEDDINGS, table, matrix)
    write_json(
        out / INDEX_META,
        {
            "labels": table.label_count,
            "entries": len(table),
            "dim": index.dim,
            "provenance": matrix.provenance,
            "source": str(args.ontology),
            "created_at": datetime.now(timezone.utc).isoformat(),
        },
    )
    logger.info(f"Index written to {out}")
    return 0
