"""
Command-line entry point
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from ontonorm import __version__
from ontonorm.cli.commands import evaluate, experiments, index, ingest, normalize
from ontonorm.cli.commands.common import settings_overrides
from ontonorm.core.config import load_settings
from ontonorm.core.exceptions import EXIT_USAGE_ERROR, handle_exception
from ontonorm.core.logging import setup_logging

logger = logging.getLogger(__name__)

COMMANDS = (ingest, index, normalize, evaluate, experiments)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ontonorm",
        description="Normalize phenotype terms to Human Phenotype Ontology concepts and evaluate the results.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", type=Path, help="TOML config file (flags > environment > .env > file)")
    parser.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")
    subparsers = parser.add_subparsers(dest="command", metavar="command")
    subparsers.required = True
    for module in COMMANDS:
        module.register(subparsers)
    return parser


def route(argv: Optional[List[str]] = None) -> int:
    """
    Parse arguments, load settings and dispatch to a command

    Returns:
        0 on success, 1 on data errors, 2 on usage errors
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE_ERROR

    setup_logging(args.log_level or "INFO")
    try:
        settings = load_settings(args.config, **settings_overrides(args))
    except (ValidationError, ValueError, FileNotFoundError) as e:
        logger.error(f"Invalid configuration: {str(e)}")
        return EXIT_USAGE_ERROR
    if args.log_level is None:
        setup_logging(settings.log_level)

    try:
        return args.handler(args, settings)
    except Exception as e:
        return handle_exception(e)


def main() -> None:
    sys.exit(route(sys.argv[1:]))


if __name__ == "__main__":
    main()
