"""Document data model and JSON-lines corpus I/O.

A Document is the unit of work for every pipeline stage. The on-disk
interchange format is JSON-lines: one UTF-8 JSON object per line with the
fixed field names ``id``, ``source``, ``url``, ``title``, ``text``,
``sentences``, ``meta`` and ``history``. Optional fields are omitted when
empty so files stay small and diff-friendly. Files may be gzip-compressed;
compression is detected from the magic bytes, not the file name.
"""

from __future__ import annotations

import gzip
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import IO, Iterable, Iterator, Optional

from .errors import InvalidEncoding, MalformedRecord, UnreadableInput

# Upper bound on a single serialized record; larger lines are rejected so a
# corrupt input cannot exhaust memory one document at a time.
DEFAULT_MAX_RECORD_BYTES = 10 * 1024 * 1024

_ACTIONS = ("kept", "modified", "dropped")


@dataclass
class Sentence:
    """A segmented span of a document, with its per-stage filter flag."""

    text: str
    kept: bool = True
    reject_reason: Optional[str] = None


@dataclass
class StageRecord:
    """One entry in a document's stage-history trail."""

    stage: str
    action: str  # kept | modified | dropped
    detail: Optional[str] = None


@dataclass
class Document:
    """A text unit with stable id, provenance and a stage-history trail.

    Documents are treated as immutable values: stages never mutate a
    Document in place, they build a new one (see :func:`evolve`). That makes
    them safe to ship between worker processes.
    """

    id: str
    source: str
    text: str
    url: Optional[str] = None
    title: Optional[str] = None
    sentences: Optional[list[Sentence]] = None
    meta: dict[str, str] = field(default_factory=dict)
    history: list[StageRecord] = field(default_factory=list)

    def kept_sentences(self) -> list[Sentence]:
        return [s for s in self.sentences or [] if s.kept]

    def token_count(self) -> int:
        return len(self.text.split())


def evolve(doc: Document, **changes) -> Document:
    """Return a copy of ``doc`` with the given fields replaced."""
    return replace(doc, **changes)


def with_history(doc: Document, stage: str, action: str, detail: Optional[str] = None) -> Document:
    """Return a copy of ``doc`` with one StageRecord appended."""
    if action not in _ACTIONS:
        raise ValueError(f"unknown stage action: {action!r}")
    return replace(doc, history=list(doc.history) + [StageRecord(stage, action, detail)])


def serialize_document(doc: Document) -> bytes:
    """Serialize a Document to a single JSON line (with trailing newline)."""
    rec: dict = {"id": doc.id, "source": doc.source}
    if doc.url is not None:
        rec["url"] = doc.url
    if doc.title is not None:
        rec["title"] = doc.title
    rec["text"] = doc.text
    if doc.sentences is not None:
        rec["sentences"] = [_sentence_to_json(s) for s in doc.sentences]
    if doc.meta:
        rec["meta"] = doc.meta
    if doc.history:
        rec["history"] = [_record_to_json(r) for r in doc.history]
    return json.dumps(rec, ensure_ascii=False, separators=(",", ":")).encode("utf-8") + b"\n"


def deserialize_document(line: bytes | str, max_bytes: int = DEFAULT_MAX_RECORD_BYTES) -> Document:
    """Parse one JSON line into a Document.

    Raises MalformedRecord for anything that does not satisfy the schema
    (bad JSON, missing or empty id/source/text, oversized record) and
    InvalidEncoding for byte input that is not UTF-8. Never raises anything
    else on malformed input.
    """
    if isinstance(line, bytes):
        if len(line) > max_bytes:
            raise MalformedRecord(f"record exceeds {max_bytes} bytes")
        try:
            line = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise InvalidEncoding(str(exc)) from None
    elif len(line.encode("utf-8", errors="ignore")) > max_bytes:
        raise MalformedRecord(f"record exceeds {max_bytes} bytes")
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedRecord(f"invalid JSON: {exc}") from None
    if not isinstance(rec, dict):
        raise MalformedRecord("record is not a JSON object")
    for key in ("id", "source", "text"):
        value = rec.get(key)
        if not isinstance(value, str) or (key != "text" and not value):
            raise MalformedRecord(f"missing or invalid field {key!r}")
    sentences = None
    if "sentences" in rec:
        raw = rec["sentences"]
        if not isinstance(raw, list):
            raise MalformedRecord("sentences is not a list")
        try:
            sentences = [_sentence_from_json(s) for s in raw]
        except (TypeError, KeyError, AttributeError):
            raise MalformedRecord("malformed sentence entry") from None
    history = []
    for raw in rec.get("history", []):
        try:
            history.append(StageRecord(raw["stage"], raw["action"], raw.get("detail")))
        except (TypeError, KeyError):
            raise MalformedRecord("malformed history entry") from None
    meta = rec.get("meta", {})
    if not isinstance(meta, dict) or any(
        not isinstance(k, str) or not isinstance(v, str) for k, v in meta.items()
    ):
        raise MalformedRecord("meta is not a string map")
    return Document(
        id=rec["id"],
        source=rec["source"],
        text=rec["text"],
        url=rec.get("url"),
        title=rec.get("title"),
        sentences=sentences,
        meta=meta,
        history=history,
    )


def _sentence_to_json(s: Sentence) -> dict:
    rec: dict = {"text": s.text, "kept": s.kept}
    if s.reject_reason is not None:
        rec["reason"] = s.reject_reason
    return rec


def _sentence_from_json(rec: dict) -> Sentence:
    return Sentence(text=rec["text"], kept=bool(rec.get("kept", True)), reject_reason=rec.get("reason"))


def _record_to_json(r: StageRecord) -> dict:
    rec: dict = {"stage": r.stage, "action": r.action}
    if r.detail is not None:
        rec["detail"] = r.detail
    return rec


_GZIP_MAGIC = b"\x1f\x8b"


def open_corpus_read(path: str | Path) -> IO[bytes]:
    """Open a corpus file for reading, transparently ungzipping by magic bytes."""
    path = Path(path)
    try:
        fh = open(path, "rb")
    except OSError as exc:
        raise UnreadableInput(f"{path}: {exc}") from None
    magic = fh.read(2)
    fh.seek(0)
    if magic == _GZIP_MAGIC:
        return gzip.GzipFile(fileobj=fh, mode="rb")  # type: ignore[return-value]
    return fh


def open_corpus_write(path: str | Path) -> IO[bytes]:
    """Open a corpus file for writing; ``.gz`` suffix selects gzip.

    Gzip output uses mtime=0 so identical corpora produce identical bytes.
    """
    path = Path(path)
    fh = open(path, "wb")
    if path.suffix == ".gz":
        # filename="" and mtime=0 keep the gzip header content-independent
        return gzip.GzipFile(filename="", fileobj=fh, mode="wb", mtime=0)  # type: ignore[return-value]
    return fh


def read_corpus(path: str | Path, max_bytes: int = DEFAULT_MAX_RECORD_BYTES) -> Iterator[Document]:
    """Stream Documents from a JSON-lines corpus file."""
    with open_corpus_read(path) as fh:
        for line in fh:
            if line.strip():
                yield deserialize_document(line, max_bytes=max_bytes)


def write_corpus(path: str | Path, docs: Iterable[Document]) -> int:
    """Write Documents to a JSON-lines corpus file; returns the count written."""
    n = 0
    with open_corpus_write(path) as fh:
        for doc in docs:
            fh.write(serialize_document(doc))
            n += 1
    return n
