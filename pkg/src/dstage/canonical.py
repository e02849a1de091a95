"""Canonical JSON forms.

Two flavors: a compact form used for request digests (key order and
whitespace independent) and a pretty form used for files on disk so that
fixtures and run artifacts diff cleanly.
"""

import hashlib
import os
import json
from pathlib import Path
from typing import Any


def canonical_dumps(obj: Any) -> str:
    """Compact JSON with sorted keys; the digest input form."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def pretty_dumps(obj: Any) -> str:
    """Indented JSON with sorted keys and a trailing newline; the on-disk form."""
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def digest(obj: Any) -> str:
    """sha256 hex digest of the canonical compact form."""
    return hashlib.sha256(canonical_dumps(obj).encode("utf-8")).hexdigest()


def text_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def write_document(path: Path, obj: Any) -> None:
    """Atomic write: concurrent readers see either the old or the new document."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(pretty_dumps(obj), encoding="utf-8")
    os.replace(tmp, path)


def read_document(path: Path) -> Any:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def append_jsonl(path: Path, obj: Any) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a", encoding="utf-8") as fh:
        fh.write(canonical_dumps(obj) + "\n")


def read_jsonl(path: Path) -> list:
    """Read an append-only log.

    An unparseable final line is an append still in flight and marks the
    end of the readable log; an unparseable line mid-file is a crash
    leftover and is skipped.
    """
    lines = [line.strip() for line in Path(path).read_text(encoding="utf-8").splitlines()]
    rows = []
    for i, line in enumerate(lines):
        if not line:
            continue
        try:
            rows.append(json.loads(line))
        except json.JSONDecodeError:
            if i == len(lines) - 1:
                break
    return rows
