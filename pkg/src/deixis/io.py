"""JSONL persistence and run manifests."""
from __future__ import annotations

import hashlib
import json
import os
import time
from pathlib import Path
from typing import Callable, Iterable, Iterator, Optional

from .errors import IoFailure, ParseError


def write_jsonl(path, records: Iterable[dict]) -> int:
    """Write one compact JSON object per line; the file is replaced atomically."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    n = 0
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(tmp, "w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(json.dumps(rec, sort_keys=True, separators=(",", ":")))
                fh.write("\n")
                n += 1
        os.replace(tmp, path)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return n


def iter_jsonl(path, decode: Optional[Callable] = None) -> Iterator:
    """Yield records, or ``decode(record)``; bad lines raise ParseError with a 1-based line number."""
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                if not isinstance(rec, dict):
                    raise ValueError("record is not a JSON object")
                yield decode(rec) if decode else rec
            except (ValueError, KeyError, TypeError) as exc:
                raise ParseError(f"{path}: {exc}", lineno) from exc


def read_jsonl(path, decode: Optional[Callable] = None) -> list:
    return list(iter_jsonl(path, decode))


def write_json(path, obj) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def read_json(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}", getattr(exc, "lineno", 0)) from exc


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def manifest_path(data_path) -> Path:
    p = Path(data_path)
    return p.with_name(p.name + ".manifest.json")


def write_manifest(data_path, command: str, config_hash: str, extra: dict) -> dict:
    """Deterministic manifest next to ``data_path``; wall-clock times go to a separate sidecar."""
    manifest = {"command": command, "config_hash": config_hash, "output": Path(data_path).name}
    manifest.update(extra)
    write_json(manifest_path(data_path), manifest)
    write_json(Path(data_path).with_name(Path(data_path).name + ".times.json"), {"written_at": time.time()})
    return manifest


def read_manifest(data_path) -> Optional[dict]:
    p = manifest_path(data_path)
    return read_json(p) if p.exists() else None
