"""Parse heterogeneous raw inputs into Documents.

Four input containers are supported:

* ``plaintext_dir`` — a directory tree of ``.txt`` files, one document each.
* ``jsonl`` — one JSON object per line; this toolkit's own corpus format is
  accepted as-is, raw dumps only need a ``text`` field.
* ``warc_lite`` — a subset of WARC 1.0: response records with text/html or
  text/plain payloads; other records are skipped and counted.
* ``news_tsv`` — a tab-separated news dump with a header row naming at
  least ``title``, ``text`` and ``category`` columns.

Readers yield documents in deterministic order (lexicographic file order,
then record order) and never raise on malformed records: those are counted
in the ReadStats and skipped.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional

from .docmodel import Document, open_corpus_read
from .errors import ConfigError, UnreadableInput

FORMATS = ("plaintext_dir", "jsonl", "warc_lite", "news_tsv")


@dataclass
class SourceSpec:
    name: str
    format: str
    path: str

    def __post_init__(self):
        if self.format not in FORMATS:
            raise ConfigError(f"unknown source format {self.format!r} (source {self.name!r})")


@dataclass
class ReadStats:
    """Per-source accounting of what the reader saw."""

    records: int = 0      # documents yielded
    malformed: int = 0    # records skipped because they do not parse
    skipped: int = 0      # records skipped by policy (non-response, non-text, ...)
    by_file: dict[str, int] = field(default_factory=dict)


def read_manifest(path: str | Path) -> list[SourceSpec]:
    """Manifest file: tab-separated (name, format, path) triples, '#' comments.

    Relative paths resolve against the manifest's directory.
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise UnreadableInput(f"{path}: {exc}") from None
    specs = []
    for i, line in enumerate(lines):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 3:
            raise ConfigError(f"{path}:{i + 1}: expected name<TAB>format<TAB>path")
        name, fmt, src_path = cols
        resolved = Path(src_path)
        if not resolved.is_absolute():
            resolved = path.parent / resolved
        specs.append(SourceSpec(name=name, format=fmt, path=str(resolved)))
    return specs


def read_source(spec: SourceSpec, stats: Optional[ReadStats] = None) -> Iterator[Document]:
    """Stream Documents from one source in deterministic order."""
    if stats is None:
        stats = ReadStats()
    root = Path(spec.path)
    if not root.exists():
        raise UnreadableInput(f"source {spec.name!r}: path does not exist: {root}")
    reader = {
        "plaintext_dir": _read_plaintext_dir,
        "jsonl": _read_jsonl,
        "warc_lite": _read_warc,
        "news_tsv": _read_news_tsv,
    }[spec.format]
    yield from reader(spec, root, stats)


def _record_id(spec: SourceSpec, rel_path: str, index: int) -> str:
    return f"{spec.name}:{rel_path}:{index}"


def _read_plaintext_dir(spec: SourceSpec, root: Path, stats: ReadStats) -> Iterator[Document]:
    if not root.is_dir():
        raise UnreadableInput(f"source {spec.name!r}: not a directory: {root}")
    files = sorted(root.rglob("*.txt"), key=lambda p: p.relative_to(root).as_posix())
    for f in files:
        rel = f.relative_to(root).as_posix()
        try:
            text = f.read_bytes().decode("utf-8", errors="replace")
        except OSError:
            stats.malformed += 1
            continue
        stats.records += 1
        stats.by_file[rel] = stats.by_file.get(rel, 0) + 1
        yield Document(id=_record_id(spec, rel, 0), source=spec.name, text=text)


def _read_jsonl(spec: SourceSpec, root: Path, stats: ReadStats) -> Iterator[Document]:
    rel = root.name
    index = 0
    with open_corpus_read(root) as fh:
        for raw in fh:
            if not raw.strip():
                continue
            record_index = index
            index += 1
            try:
                rec = json.loads(raw.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError):
                stats.malformed += 1
                continue
            if not isinstance(rec, dict) or not isinstance(rec.get("text"), str):
                stats.malformed += 1
                continue
            # Canonical corpus records keep their stable id; raw dumps get one.
            own_id = rec.get("id")
            if isinstance(own_id, str) and own_id:
                doc_id = own_id
            else:
                doc_id = _record_id(spec, rel, record_index)
            meta = {}
            raw_meta = rec.get("meta")
            if isinstance(raw_meta, dict):
                meta = {str(k): str(v) for k, v in raw_meta.items()}
            stats.records += 1
            yield Document(
                id=doc_id,
                source=spec.name,
                text=rec["text"],
                url=rec.get("url") if isinstance(rec.get("url"), str) else None,
                title=rec.get("title") if isinstance(rec.get("title"), str) else None,
                meta=meta,
            )


_WARC_MAGIC = b"WARC/"


def _read_warc(spec: SourceSpec, root: Path, stats: ReadStats) -> Iterator[Document]:
    """WARC 1.0 subset: response records with text payloads.

    The whole file is read into memory; crawl shards are expected to be
    modest (split archives before ingesting if not).
    """
    rel = root.name
    with open_corpus_read(root) as fh:
        data = fh.read()
    pos = 0
    index = 0
    while True:
        start = data.find(_WARC_MAGIC, pos)
        if start < 0:
            break
        record_index = index
        index += 1
        parsed = _parse_warc_record(data, start)
        if parsed is None:
            stats.malformed += 1
            pos = start + len(_WARC_MAGIC)
            continue
        headers, payload, pos = parsed
        if headers.get("warc-type") != "response":
            stats.skipped += 1
            continue
        body, content_type = _split_http_payload(payload)
        if not ("text/html" in content_type or "text/plain" in content_type):
            stats.skipped += 1
            continue
        url = headers.get("warc-target-uri")
        meta = {"content_type": content_type}
        if headers.get("warc-date"):
            meta["date"] = headers["warc-date"]
        stats.records += 1
        yield Document(
            id=_record_id(spec, rel, record_index),
            source=spec.name,
            text=body.decode("utf-8", errors="replace"),
            url=url,
            meta=meta,
        )


def _parse_warc_record(data: bytes, start: int) -> Optional[tuple[dict[str, str], bytes, int]]:
    head_end = data.find(b"\r\n\r\n", start)
    if head_end < 0:
        return None
    headers: dict[str, str] = {}
    for line in data[start:head_end].split(b"\r\n")[1:]:
        key, sep, value = line.partition(b":")
        if not sep:
            return None
        headers[key.decode("ascii", "replace").strip().lower()] = value.decode(
            "utf-8", "replace"
        ).strip()
    try:
        length = int(headers["content-length"])
    except (KeyError, ValueError):
        return None
    body_start = head_end + 4
    if body_start + length > len(data):
        return None
    payload = data[body_start : body_start + length]
    return headers, payload, body_start + length


def _split_http_payload(payload: bytes) -> tuple[bytes, str]:
    """Split an HTTP response payload into (body, content-type)."""
    if not payload.startswith(b"HTTP/"):
        return payload, "text/plain"
    sep = payload.find(b"\r\n\r\n")
    if sep < 0:
        return b"", ""
    content_type = ""
    for line in payload[:sep].split(b"\r\n")[1:]:
        key, _, value = line.partition(b":")
        if key.decode("ascii", "replace").strip().lower() == "content-type":
            content_type = value.decode("utf-8", "replace").strip().lower()
    return payload[sep + 4 :], content_type


def _read_news_tsv(spec: SourceSpec, root: Path, stats: ReadStats) -> Iterator[Document]:
    rel = root.name
    with open_corpus_read(root) as fh:
        lines = fh.read().decode("utf-8", errors="replace").splitlines()
    if not lines:
        return
    header = [c.strip().lower() for c in lines[0].split("\t")]
    required = {"title", "text", "category"}
    if not required.issubset(header):
        raise UnreadableInput(
            f"source {spec.name!r}: news_tsv header must name columns {sorted(required)}"
        )
    col = {name: header.index(name) for name in header}
    for record_index, line in enumerate(lines[1:]):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) != len(header):
            stats.malformed += 1
            continue
        meta = {
            name: cols[idx]
            for name, idx in col.items()
            if name not in ("title", "text") and cols[idx]
        }
        stats.records += 1
        yield Document(
            id=_record_id(spec, rel, record_index),
            source=spec.name,
            text=cols[col["text"]],
            title=cols[col["title"]] or None,
            meta=meta,
        )
