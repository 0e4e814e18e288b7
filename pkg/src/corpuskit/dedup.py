"""Two-level deduplication: token n-gram overlap and sentence occurrence caps.

Document-level dedup is sequential admission: a document is dropped when the
fraction of its token n-grams (shingles) already seen among admitted
documents exceeds a threshold; the shingles of admitted documents extend the
index. The first occurrence of any content is therefore always kept, and the
result depends only on the stream order, which must be deterministic.

Sentence-level dedup runs in two passes over the same stream: pass one
counts normalized sentences corpus-wide, pass two keeps only the first
``max_occurrences`` occurrences of each sentence.

Shingles are stored either as exact strings (test/oracle mode) or as stable
64-bit hashes. Hashing trades a vanishingly small false-positive drop rate
for a large memory saving; the collision bound is documented in the README.
The hashed index can spill sorted runs to disk so memory stays bounded on
large corpora.
"""

from __future__ import annotations

import heapq
import tempfile
import unicodedata
from dataclasses import dataclass, field
from hashlib import blake2b
from pathlib import Path
from typing import Callable, Iterable, Iterator, Optional

import numpy as np

from .docmodel import Document, Sentence, evolve
from .errors import EmptyDocument

DEFAULT_SHINGLE_N = 10
DEFAULT_THRESHOLD = 0.5
DEFAULT_MAX_OCCURRENCES = 4

_TERMINAL_PUNCT = ".!?…;:,"
# Odd multiplier for the rolling polynomial combine (golden-ratio constant).
_MULT = np.uint64(0x9E3779B97F4A7C15)


def normalize_sentence(text: str) -> str:
    """Canonical sentence form used for counting and matching.

    NFC, casefold, whitespace collapsed to single spaces, terminal
    punctuation stripped. Shared by sentence dedup and decontamination; any
    divergence between the two would silently break the guarantee that a
    decontaminated corpus reports zero contamination.
    """
    t = unicodedata.normalize("NFC", text).casefold()
    t = " ".join(t.split())
    return t.rstrip(_TERMINAL_PUNCT).rstrip()


def hash64(data: str) -> int:
    """Stable (process- and platform-independent) 64-bit hash of a string."""
    return int.from_bytes(blake2b(data.encode("utf-8"), digest_size=8).digest(), "little")


class _SpillingHashSet:
    """A growing set of uint64 hashes with bounded resident memory.

    New hashes accumulate in an in-memory set; when it exceeds
    ``max_in_memory`` entries it is sorted and written out as a run file
    (raw little-endian uint64, memory-mapped for queries). Membership checks
    consult the buffer plus a binary search in every run. Runs are merged
    with a streaming k-way merge when their number grows."""

    def __init__(self, max_in_memory: int = 4_000_000, spill_dir: Optional[str | Path] = None,
                 max_runs: int = 8):
        self._buffer: set[int] = set()
        self.max_in_memory = max(1, max_in_memory)
        self.max_runs = max(2, max_runs)
        self._runs: list[tuple[Path, np.ndarray]] = []
        self._owned_dir: Optional[tempfile.TemporaryDirectory] = None
        if spill_dir is None:
            self._owned_dir = tempfile.TemporaryDirectory(prefix="corpuskit-dedup-")
            spill_dir = self._owned_dir.name
        self._spill_dir = Path(spill_dir)
        self._spill_dir.mkdir(parents=True, exist_ok=True)
        self._next_run = 0

    @property
    def run_count(self) -> int:
        return len(self._runs)

    def __contains__(self, h: int) -> bool:
        if h in self._buffer:
            return True
        for _, run in self._runs:
            i = int(np.searchsorted(run, np.uint64(h)))
            if i < len(run) and int(run[i]) == h:
                return True
        return False

    def contains_many(self, hashes: np.ndarray) -> np.ndarray:
        res = np.fromiter((int(h) in self._buffer for h in hashes), bool, len(hashes))
        for _, run in self._runs:
            if not len(run):
                continue
            idx = np.searchsorted(run, hashes)
            idx = np.minimum(idx, len(run) - 1)
            res |= run[idx] == hashes
        return res

    def add_many(self, hashes: np.ndarray) -> None:
        self._buffer.update(int(h) for h in hashes)
        if len(self._buffer) > self.max_in_memory:
            self._spill()

    def _run_path(self) -> Path:
        path = self._spill_dir / f"run-{self._next_run:05d}.bin"
        self._next_run += 1
        return path

    def _open_run(self, path: Path) -> np.ndarray:
        return np.memmap(path, dtype="<u8", mode="r")

    def _spill(self) -> None:
        arr = np.fromiter(self._buffer, np.uint64, len(self._buffer))
        arr.sort()
        path = self._run_path()
        arr.astype("<u8").tofile(path)
        self._buffer.clear()
        self._runs.append((path, self._open_run(path)))
        if len(self._runs) > self.max_runs:
            self._merge_runs()

    def _merge_runs(self) -> None:
        chunk = 1 << 20
        iters = [
            (int(v) for start in range(0, len(run), chunk) for v in run[start : start + chunk])
            for _, run in self._runs
        ]
        path = self._run_path()
        pending: list[int] = []
        last = None
        with open(path, "wb") as fh:
            for v in heapq.merge(*iters):
                if v != last:
                    pending.append(v)
                    last = v
                    if len(pending) >= chunk:
                        np.array(pending, dtype="<u8").tofile(fh)
                        pending.clear()
            if pending:
                np.array(pending, dtype="<u8").tofile(fh)
        old_paths = [p for p, _ in self._runs]
        self._runs = [(path, self._open_run(path))]
        for p in old_paths:
            p.unlink(missing_ok=True)

    def close(self) -> None:
        paths = [p for p, _ in self._runs]
        self._runs = []
        if self._owned_dir is not None:
            self._owned_dir.cleanup()
            self._owned_dir = None
        else:
            # Only remove files this set created; the directory is the caller's.
            for p in paths:
                p.unlink(missing_ok=True)


class ShingleIndex:
    """Seen-shingle index for sequential document dedup.

    ``exact=True`` stores the joined token n-grams as strings (no collisions,
    for tests and oracles); the default stores 64-bit hashes and can spill to
    disk. ``n`` is the token n-gram order; documents shorter than ``n``
    tokens contribute a single whole-document shingle.
    """

    def __init__(
        self,
        n: int = DEFAULT_SHINGLE_N,
        threshold: float = DEFAULT_THRESHOLD,
        exact: bool = False,
        max_in_memory: int = 4_000_000,
        spill_dir: Optional[str | Path] = None,
    ):
        if n < 2:
            raise ValueError(f"shingle order must be >= 2, got {n}")
        if not 0.0 < threshold <= 1.0:
            raise ValueError(f"threshold must be in (0, 1], got {threshold}")
        self.n = n
        self.threshold = threshold
        self.exact = exact
        self._seen_exact: set[str] = set()
        self._seen_hashes: Optional[_SpillingHashSet] = None
        if not exact:
            self._seen_hashes = _SpillingHashSet(max_in_memory=max_in_memory, spill_dir=spill_dir)
        self._token_cache: dict[str, int] = {}

    # -- shingle construction -------------------------------------------------

    def _exact_shingles(self, tokens: list[str]) -> list[str]:
        if len(tokens) <= self.n:
            return [" ".join(tokens)]
        return [" ".join(tokens[i : i + self.n]) for i in range(len(tokens) - self.n + 1)]

    def _hash_shingles(self, tokens: list[str]) -> np.ndarray:
        cache = self._token_cache
        vals = np.empty(len(tokens), dtype=np.uint64)
        for i, tok in enumerate(tokens):
            h = cache.get(tok)
            if h is None:
                h = hash64(tok)
                if len(cache) < 4_000_000:
                    cache[tok] = h
            vals[i] = h
        n = min(self.n, len(tokens))
        width = len(tokens) - n + 1
        acc = np.zeros(width, dtype=np.uint64)
        for j in range(n):
            acc = acc * _MULT + vals[j : j + width]
        return acc

    # -- queries and updates ---------------------------------------------------

    def ratio(self, tokens: list[str]) -> float:
        """Fraction of this token sequence's shingles already in the index."""
        if not tokens:
            raise EmptyDocument("cannot compute duplicate ratio of an empty document")
        if self.exact:
            shingles = self._exact_shingles(tokens)
            seen = sum(1 for s in shingles if s in self._seen_exact)
            return seen / len(shingles)
        hashes = self._hash_shingles(tokens)
        assert self._seen_hashes is not None
        return float(self._seen_hashes.contains_many(hashes).sum()) / len(hashes)

    def add(self, tokens: list[str]) -> None:
        if not tokens:
            raise EmptyDocument("cannot add an empty document to the index")
        if self.exact:
            self._seen_exact.update(self._exact_shingles(tokens))
        else:
            assert self._seen_hashes is not None
            self._seen_hashes.add_many(self._hash_shingles(tokens))

    def close(self) -> None:
        if self._seen_hashes is not None:
            self._seen_hashes.close()


def duplicate_ratio(doc: Document, index: ShingleIndex) -> float:
    """Overlap of a document against the index; does not mutate the index."""
    return index.ratio(doc.text.split())


DropCallback = Callable[[Document, float], None]


def onion_dedup(
    docs: Iterable[Document],
    index: ShingleIndex,
    on_drop: Optional[DropCallback] = None,
) -> Iterator[Document]:
    """Sequential document-level dedup in stream order.

    Documents whose duplicate ratio exceeds the index threshold are dropped
    (reported through ``on_drop`` with the ratio); kept documents extend the
    index. Empty documents are dropped with ratio 1.0.
    """
    for doc in docs:
        tokens = doc.text.split()
        if not tokens:
            if on_drop is not None:
                on_drop(doc, 1.0)
            continue
        ratio = index.ratio(tokens)
        if ratio > index.threshold:
            if on_drop is not None:
                on_drop(doc, ratio)
            continue
        index.add(tokens)
        yield doc


@dataclass
class SentenceCounter:
    """Corpus-wide occurrence counts of normalized sentences (pass one)."""

    max_occurrences: int = DEFAULT_MAX_OCCURRENCES
    exact: bool = False
    counts: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.max_occurrences < 1:
            raise ValueError("max_occurrences must be >= 1")

    def key(self, sentence_text: str):
        norm = normalize_sentence(sentence_text)
        return norm if self.exact else hash64(norm)

    def observe(self, doc: Document) -> None:
        if not doc.sentences:
            return
        for sent in doc.sentences:
            if sent.kept:
                k = self.key(sent.text)
                self.counts[k] = self.counts.get(k, 0) + 1

    def merge(self, other: "SentenceCounter") -> None:
        """Counters are commutative monoids: shard counts can be merged."""
        for k, v in other.counts.items():
            self.counts[k] = self.counts.get(k, 0) + v


def count_sentences(
    docs: Iterable[Document],
    max_occurrences: int = DEFAULT_MAX_OCCURRENCES,
    exact: bool = False,
) -> SentenceCounter:
    counter = SentenceCounter(max_occurrences=max_occurrences, exact=exact)
    for doc in docs:
        counter.observe(doc)
    return counter


RemovalCallback = Callable[[Document, int, int], None]


def sentence_dedup(
    docs: Iterable[Document],
    counter: SentenceCounter,
    on_drop: Optional[Callable[[Document, int], None]] = None,
    on_removal: Optional[RemovalCallback] = None,
) -> Iterator[Document]:
    """Pass two: keep the first ``max_occurrences`` occurrences of each sentence.

    Must consume the same deterministic stream that built ``counter``.
    Occurrences beyond the cap are removed in stream order; documents left
    without sentences are dropped (``on_drop`` receives the removed count).
    ``on_removal`` is called with (doc, sentence_index, corpus_count) for
    every removed sentence. Text of modified documents is rebuilt by joining
    the surviving sentences with newlines.
    """
    cap = counter.max_occurrences
    seen: dict = {}
    for doc in docs:
        if not doc.sentences:
            yield doc
            continue
        kept: list[Sentence] = []
        removed = 0
        for i, sent in enumerate(doc.sentences):
            if not sent.kept:
                kept.append(sent)
                continue
            k = counter.key(sent.text)
            total = counter.counts.get(k, 0)
            if total <= cap:
                kept.append(sent)
                continue
            occurrence = seen.get(k, 0) + 1
            seen[k] = occurrence
            if occurrence <= cap:
                kept.append(sent)
            else:
                removed += 1
                if on_removal is not None:
                    on_removal(doc, i, total)
        if not any(s.kept for s in kept):
            if on_drop is not None:
                on_drop(doc, removed)
            continue
        if removed:
            text = "\n".join(s.text for s in kept if s.kept)
            yield evolve(doc, text=text, sentences=kept)
        else:
            yield doc
