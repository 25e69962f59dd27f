"""
File helpers shared by the services and the CLI
"""

import json
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterator, List, TextIO


@contextmanager
def atomic_write(path: Path, newline: str = "") -> Iterator[TextIO]:
    """
    Write a text file through a sibling temporary file

    The target only appears once the block finishes without an exception.

    Args:
        path: Final file path
        newline: Newline translation passed to open()

    Yields:
        Writable text handle
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=str(path.parent))
    tmp_path = Path(tmp_name)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline=newline) as handle:
            yield handle
        tmp_path.replace(path)
    except BaseException:
        if tmp_path.exists():
            tmp_path.unlink()
        raise


def read_jsonl(path: Path) -> List[dict]:
    """Read a JSON-lines file, skipping blank lines"""
    rows = []
    with Path(path).open("r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def write_json(path: Path, payload: Any) -> None:
    """Write pretty JSON atomically"""
    with atomic_write(path) as f:
        json.dump(payload, f, indent=2, ensure_ascii=False, sort_keys=True)
        f.write("\n")


def read_terms_file(path: Path) -> List[str]:
    """Read a terms file: UTF-8, one term per line, '#' comments ignored"""
    terms = []
    with Path(path).open("r", encoding="utf-8-sig") as f:
        for line in f:
            term = line.strip()
            if not term or term.startswith("#"):
                continue
            terms.append(term)
    return terms


def write_terms_file(terms: List[str], path: Path) -> None:
    """Write terms in the one-term-per-line format"""
    with atomic_write(path) as f:
        for term in terms:
            f.write(f"{term}\n")
