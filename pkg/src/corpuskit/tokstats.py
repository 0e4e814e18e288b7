"""Subword tokenizer application and statistics.

Applies pre-trained BPE (optionally byte-level) and WordPiece vocabularies
and computes the statistics we report about them: mean subwords per
sentence and vocabulary intersections. Training vocabularies is out of
scope; the loaders accept the two de-facto file conventions (JSON vocab +
text merges file, and one-token-per-line vocab) so released tokenizers can
be dropped in directly.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .errors import MissingBaseToken, NoSentences, TokenizerFileError

_INF = float("inf")

# Lossless pre-segmentation: each non-space piece absorbs at most one
# preceding space; remaining whitespace runs are their own pieces. The
# pieces always concatenate back to the input.
_PRESEGMENT_RE = re.compile(r" ?\S+|\s+(?!\S)|\s+")


def _byte_to_unicode() -> dict[int, str]:
    """The customary bijection from byte values to printable characters.

    Printable Latin-1 ranges map to themselves; the remaining byte values are
    assigned code points 256 and up, in order.
    """
    keep = (
        list(range(ord("!"), ord("~") + 1))
        + list(range(ord("¡"), ord("¬") + 1))
        + list(range(ord("®"), ord("ÿ") + 1))
    )
    mapping = {}
    n = 0
    for b in range(256):
        if b in keep:
            mapping[b] = chr(b)
        else:
            mapping[b] = chr(256 + n)
            n += 1
    return mapping


BYTE_TO_UNICODE = _byte_to_unicode()
UNICODE_TO_BYTE = {c: b for b, c in BYTE_TO_UNICODE.items()}


@dataclass
class BpeTokenizer:
    """Greedy merge-based tokenizer over a fixed vocabulary.

    ``merges`` are ordered; the list position is the merge rank (lower rank
    applies first). In byte-level mode the text is mapped through the
    byte-to-unicode table so the base vocabulary covers any input and the
    encoding is lossless.
    """

    vocab: dict[str, int]
    merges: list[tuple[str, str]]
    byte_level: bool = True
    _ranks: dict[tuple[str, str], int] = field(init=False, repr=False)
    _cache: dict[str, tuple[str, ...]] = field(init=False, repr=False, default_factory=dict)

    def __post_init__(self):
        for left, right in self.merges:
            if left + right not in self.vocab:
                raise TokenizerFileError(f"merge result {left + right!r} is not in the vocabulary")
        self._ranks = {pair: rank for rank, pair in enumerate(self.merges)}

    def encode(self, text: str) -> list[str]:
        """Tokenize ``text`` into subword strings.

        Byte-level mode: pieces carry a leading-space marker and concatenating
        the decoded tokens reproduces the input bytes exactly. Non-byte-level
        mode splits on whitespace (whitespace itself is not represented) and
        raises MissingBaseToken when a character is missing from the
        vocabulary.
        """
        out: list[str] = []
        pieces = _PRESEGMENT_RE.findall(text) if self.byte_level else text.split()
        for piece in pieces:
            cached = self._cache.get(piece)
            if cached is None:
                cached = tuple(self._encode_piece(piece))
                if len(self._cache) < 100_000:
                    self._cache[piece] = cached
            out.extend(cached)
        return out

    def _encode_piece(self, piece: str) -> list[str]:
        if self.byte_level:
            symbols = [BYTE_TO_UNICODE[b] for b in piece.encode("utf-8")]
        else:
            symbols = list(piece)
        for sym in symbols:
            if sym not in self.vocab:
                raise MissingBaseToken(f"base token {sym!r} missing from vocabulary")
        return _apply_merges(symbols, self._ranks)

    def decode(self, tokens: Iterable[str]) -> str:
        joined = "".join(tokens)
        if self.byte_level:
            data = bytes(UNICODE_TO_BYTE[c] for c in joined)
            return data.decode("utf-8", errors="replace")
        return joined


def _apply_merges(symbols: list[str], ranks: dict[tuple[str, str], int]) -> list[str]:
    """Repeatedly apply the best-ranked applicable merge until none applies."""
    while len(symbols) >= 2:
        best = None
        best_rank = _INF
        prev = symbols[0]
        for sym in symbols[1:]:
            rank = ranks.get((prev, sym), _INF)
            if rank < best_rank:
                best_rank = rank
                best = (prev, sym)
            prev = sym
        if best is None:
            break
        symbols = _merge_pair(symbols, best)
    return symbols


def _merge_pair(symbols: list[str], pair: tuple[str, str]) -> list[str]:
    out: list[str] = []
    i = 0
    n = len(symbols)
    while i < n:
        if i < n - 1 and symbols[i] == pair[0] and symbols[i + 1] == pair[1]:
            out.append(pair[0] + pair[1])
            i += 2
        else:
            out.append(symbols[i])
            i += 1
    return out


def bpe_encode(tok: BpeTokenizer, text: str) -> list[str]:
    return tok.encode(text)


_WP_DEFAULT_MAX_WORD_CHARS = 100


@dataclass
class WordPieceTokenizer:
    """Greedy longest-prefix-match tokenizer with ``##`` continuations."""

    vocab: set[str]
    unk_token: str = "[UNK]"
    max_word_chars: int = _WP_DEFAULT_MAX_WORD_CHARS

    def __post_init__(self):
        if self.unk_token not in self.vocab:
            raise TokenizerFileError(f"unk token {self.unk_token!r} is not in the vocabulary")

    def encode(self, text: str) -> list[str]:
        out: list[str] = []
        for word in _words_and_punct(text):
            out.extend(self._encode_word(word))
        return out

    def _encode_word(self, word: str) -> list[str]:
        if len(word) > self.max_word_chars:
            return [self.unk_token]
        tokens: list[str] = []
        start = 0
        while start < len(word):
            end = len(word)
            found = None
            while end > start:
                sub = word[start:end]
                if start > 0:
                    sub = "##" + sub
                if sub in self.vocab:
                    found = sub
                    break
                end -= 1
            if found is None:
                return [self.unk_token]
            tokens.append(found)
            start = end
        return tokens


def wordpiece_encode(tok: WordPieceTokenizer, text: str) -> list[str]:
    return tok.encode(text)


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def _words_and_punct(text: str) -> list[str]:
    """Whitespace-split words with punctuation split off as its own words."""
    out: list[str] = []
    for word in text.split():
        run = []
        for ch in word:
            if _is_punct(ch):
                if run:
                    out.append("".join(run))
                    run = []
                out.append(ch)
            else:
                run.append(ch)
        if run:
            out.append("".join(run))
    return out


# ---------------------------------------------------------------------------
# file loaders
# ---------------------------------------------------------------------------


def load_bpe_tokenizer(vocab_path: str | Path, merges_path: str | Path,
                       byte_level: bool = True) -> BpeTokenizer:
    """Load a JSON vocabulary plus a text merges file (one merge per line)."""
    try:
        vocab = json.loads(Path(vocab_path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise TokenizerFileError(f"{vocab_path}: {exc}") from None
    if not isinstance(vocab, dict):
        raise TokenizerFileError(f"{vocab_path}: vocabulary must be a JSON object")
    merges: list[tuple[str, str]] = []
    try:
        lines = Path(merges_path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise TokenizerFileError(f"{merges_path}: {exc}") from None
    for i, line in enumerate(lines):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split(" ")
        if len(parts) != 2:
            raise TokenizerFileError(f"{merges_path}:{i + 1}: expected 'left right'")
        merges.append((parts[0], parts[1]))
    return BpeTokenizer(vocab=vocab, merges=merges, byte_level=byte_level)


def load_wordpiece_vocab(path: str | Path, unk_token: str = "[UNK]") -> WordPieceTokenizer:
    """Load a one-token-per-line vocabulary file."""
    try:
        tokens = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise TokenizerFileError(f"{path}: {exc}") from None
    vocab = {t for t in (line.rstrip("\n") for line in tokens) if t}
    return WordPieceTokenizer(vocab=vocab, unk_token=unk_token)


def load_vocab_tokens(path: str | Path) -> set[str]:
    """Token set from either a JSON vocabulary or a one-per-line file."""
    path = Path(path)
    raw = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json" or raw.lstrip()[:1] == "{":
        try:
            vocab = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise TokenizerFileError(f"{path}: {exc}") from None
        if not isinstance(vocab, dict):
            raise TokenizerFileError(f"{path}: vocabulary must be a JSON object")
        return set(vocab)
    return {t for t in raw.splitlines() if t}


# ---------------------------------------------------------------------------
# statistics
# ---------------------------------------------------------------------------


def subwords_per_sentence(tokenizer, sentences: Sequence[str]) -> float:
    """Mean number of subwords per sentence under the given tokenizer."""
    if not sentences:
        raise NoSentences("no sentences to tokenize")
    total = sum(len(tokenizer.encode(s)) for s in sentences)
    return total / len(sentences)


def format_subwords_table(rows: Sequence[tuple[str, float]]) -> str:
    """Aligned two-column table: model name, subwords per sentence."""
    name_w = max(len("Model"), max((len(n) for n, _ in rows), default=0))
    lines = [f"{'Model':<{name_w}}  Subwords per sentence"]
    for name, value in rows:
        lines.append(f"{name:<{name_w}}  {value:.2f}")
    return "\n".join(lines)


_MARKERS = ("Ġ", "▁")


def _strip_markers(token: str) -> str:
    if token.startswith("##"):
        return token[2:]
    for marker in _MARKERS:
        if token.startswith(marker):
            return token[len(marker):]
    return token


@dataclass
class VocabOverlap:
    sizes: dict[str, int]
    intersections: dict[tuple[str, str], int]
    mode: str


def vocab_overlap(vocabs: Sequence[tuple[str, set[str]]], mode: str = "raw") -> VocabOverlap:
    """Sizes and pairwise intersection cardinalities of named vocabularies.

    ``raw`` compares token strings as-is; ``marker_stripped`` removes ``##``
    continuations and leading-space markers first, which makes vocabularies
    with different marker schemes comparable.
    """
    if len(vocabs) < 2:
        raise ValueError("need at least two vocabularies")
    if mode not in ("raw", "marker_stripped"):
        raise ValueError(f"unknown mode {mode!r}")
    prepared: list[tuple[str, set[str]]] = []
    for name, tokens in vocabs:
        if mode == "marker_stripped":
            tokens = {s for s in (_strip_markers(t) for t in tokens) if s}
        prepared.append((name, tokens))
    sizes = {name: len(tokens) for name, tokens in prepared}
    intersections = {}
    for i in range(len(prepared)):
        for j in range(i + 1, len(prepared)):
            a_name, a = prepared[i]
            b_name, b = prepared[j]
            intersections[(a_name, b_name)] = len(a & b)
    return VocabOverlap(sizes=sizes, intersections=intersections, mode=mode)


def format_overlap_table(overlap: VocabOverlap) -> str:
    """Aligned table of vocabulary sizes and pairwise intersections."""
    rows = [f"{name}: {size:,}" for name, size in overlap.sizes.items()]
    rows.append("")
    for (a, b), size in overlap.intersections.items():
        rows.append(f"{a} ∩ {b}: {size:,}")
    return "\n".join(rows)


def overlap_to_json(overlap: VocabOverlap) -> str:
    payload = {
        "mode": overlap.mode,
        "sizes": overlap.sizes,
        "intersections": [
            {"a": a, "b": b, "size": size} for (a, b), size in overlap.intersections.items()
        ],
    }
    return json.dumps(payload, ensure_ascii=False, indent=2)
