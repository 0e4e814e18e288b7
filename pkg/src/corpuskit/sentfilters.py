"""Rule-based sentence splitting and heuristic quality filters.

The splitter is tokenization-agnostic: a word is a maximal non-whitespace
run, and boundaries are placed at sentence-final punctuation followed by an
uppercase letter or opening punctuation, with suppression after known
abbreviations and initials. Newlines are always hard boundaries.

Document-level filters decide whether a document is kept at all;
sentence-level rules only mark individual sentences for removal, so one
corrupted line never costs an otherwise good document.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .docmodel import Document, Sentence
from .errors import NoSentences

DEFAULT_ABBREVIATIONS = frozenset(
    [
        # Catalan / Spanish
        "Dr.", "Dra.", "Sr.", "Sra.", "Srta.", "St.", "Sta.", "Excm.", "Il·lm.",
        "núm.", "Núm.", "pàg.", "pàgs.", "vol.", "cap.", "art.", "Art.", "av.",
        "Av.", "c.", "C.", "ctra.", "tel.", "Tel.", "aprox.", "etc.", "ex.",
        "p.", "pp.", "ss.", "seg.", "sig.", "Ud.", "Uds.", "Vd.", "Vds.",
        # English
        "Mr.", "Mrs.", "Ms.", "Prof.", "Jr.", "Sr.", "Inc.", "Ltd.", "Co.",
        "vs.", "e.g.", "i.e.", "cf.", "Fig.", "fig.", "No.", "no.", "St.",
    ]
)

_OPENERS = "\"'«“‘¿¡([{"
_BOUNDARY_RE = re.compile(r"([.!?…]+)([\"'»”’)\]}]*)(\s+)")
# One or more single letters each followed by a period: "J." or "J.R."
_INITIALS_RE = re.compile(r"(?:[^\W\d_]\.)+")


def load_abbreviations(path: str | Path) -> frozenset[str]:
    """Load an abbreviation list, one entry per line, UTF-8, '#' comments."""
    entries = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            entries.append(line)
    return frozenset(entries)


def split_sentences(
    text: str, abbreviations: Iterable[str] = DEFAULT_ABBREVIATIONS
) -> list[Sentence]:
    """Split normalized text into sentences.

    Boundaries require sentence-final punctuation (``. ! ? …``), optional
    closing quotes/brackets, whitespace, and then an uppercase letter or
    opening punctuation. A period does not end a sentence after a listed
    abbreviation or after single-letter initials. Newlines always split.
    Output sentences are stripped and never empty.
    """
    abbrev = abbreviations if isinstance(abbreviations, frozenset) else frozenset(abbreviations)
    abbrev_lower = frozenset(a.lower() for a in abbrev)
    sentences: list[Sentence] = []
    for line in text.split("\n"):
        line = line.strip()
        if not line:
            continue
        start = 0
        for m in _BOUNDARY_RE.finditer(line):
            nxt = m.end()
            if nxt >= len(line):
                break
            nc = line[nxt]
            if not (nc.isupper() or nc in _OPENERS):
                continue
            if m.group(1).endswith("."):
                token = _token_before(line, start, m.end(1))
                if (
                    token in abbrev
                    or token.lower() in abbrev_lower
                    or (token[:1].isupper() and _INITIALS_RE.fullmatch(token))
                ):
                    continue
            piece = line[start : m.end(2)].strip()
            if piece:
                sentences.append(Sentence(piece))
            start = nxt
        tail = line[start:].strip()
        if tail:
            sentences.append(Sentence(tail))
    return sentences


def _token_before(line: str, start: int, end: int) -> str:
    """The whitespace-delimited token ending at ``end`` (punctuation included)."""
    ws = start
    for i in range(end - 1, start - 1, -1):
        if line[i].isspace():
            ws = i + 1
            break
    else:
        ws = start
    return line[ws:end]


def sentence_length_stats(doc: Document) -> tuple[float, float]:
    """Mean and population standard deviation of words per sentence."""
    if not doc.sentences:
        raise NoSentences(f"document {doc.id} has no sentences")
    lengths = [len(s.text.split()) for s in doc.sentences]
    mean = sum(lengths) / len(lengths)
    var = sum((x - mean) ** 2 for x in lengths) / len(lengths)
    return mean, math.sqrt(var)


DEFAULT_PLACEHOLDER_PATTERNS = (
    r"(?:©|\(c\)|copyright)\s*\d{4}",
    r"tots els drets reservats",
    r"todos los derechos reservados",
    r"all rights reserved",
    r"aquest(?:a)? (?:lloc|web|pàgina) (?:web )?(?:utilitza|fa servir) (?:galetes|cookies)",
    r"este sitio (?:web )?utiliza cookies",
    r"this (?:web)?site uses cookies",
    r"política de (?:cookies|galetes|privacitat|privacidad)",
    r"privacy policy",
    r"javascript (?:està |is )?(?:desactivat|disabled)",
)


@dataclass
class FilterConfig:
    """Thresholds for the heuristic quality filters.

    Ratios are over non-whitespace characters (alpha, digit) or over letters
    (uppercase). ``sent_len_stddev_max`` is in words and catches documents
    whose line structure comes from bad PDF extraction or non-natural text.
    Every value can be overridden from the pipeline config.
    """

    min_doc_chars: int = 200
    min_sentences: int = 2
    min_alpha_ratio: float = 0.6
    max_digit_ratio: float = 0.2
    max_uppercase_ratio: float = 0.4
    sent_len_stddev_max: float = 20.0
    min_mean_words_per_sentence: float = 3.0
    sent_min_words: int = 2
    abbreviation_list: frozenset[str] = DEFAULT_ABBREVIATIONS
    placeholder_patterns: Sequence[str] = DEFAULT_PLACEHOLDER_PATTERNS

    def __post_init__(self):
        for name in ("min_alpha_ratio", "max_digit_ratio", "max_uppercase_ratio"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")
        if self.min_doc_chars < 0 or self.min_sentences < 0 or self.sent_min_words < 0:
            raise ValueError("counts must be >= 0")

    def compiled_placeholders(self) -> list[re.Pattern]:
        return [re.compile(p, re.IGNORECASE) for p in self.placeholder_patterns]


@dataclass
class FilterVerdict:
    """Outcome of apply_filters for one document."""

    kept: bool
    failed_rules: list[str] = field(default_factory=list)
    per_sentence: list[tuple[int, bool, Optional[str]]] = field(default_factory=list)


def _char_ratios(text: str) -> tuple[float, float, float]:
    """(alpha/non-ws, digit/non-ws, upper/letters) ratios of ``text``."""
    alpha = digit = upper = nonws = 0
    for ch in text:
        if ch.isspace():
            continue
        nonws += 1
        if ch.isalpha():
            alpha += 1
            if ch.isupper():
                upper += 1
        elif ch.isdigit():
            digit += 1
    if nonws == 0:
        return 0.0, 0.0, 0.0
    return alpha / nonws, digit / nonws, (upper / alpha) if alpha else 0.0


def apply_filters(doc: Document, cfg: FilterConfig) -> FilterVerdict:
    """Evaluate all quality rules for one document.

    Document-level failures (listed in ``failed_rules``) drop the document.
    Sentence-level rules never drop the document; they appear in
    ``per_sentence`` as (index, kept, reason) so the caller can remove the
    flagged sentences.
    """
    if doc.sentences is None:
        raise NoSentences(f"document {doc.id} has not been sentence-split")
    failed: list[str] = []
    if len(doc.text) < cfg.min_doc_chars:
        failed.append("min_doc_chars")
    if len(doc.sentences) < cfg.min_sentences:
        failed.append("min_sentences")
    alpha, digit, upper = _char_ratios(doc.text)
    if alpha < cfg.min_alpha_ratio:
        failed.append("alpha_ratio")
    if digit > cfg.max_digit_ratio:
        failed.append("digit_ratio")
    if upper > cfg.max_uppercase_ratio:
        failed.append("uppercase_ratio")
    if doc.sentences:
        mean, stddev = sentence_length_stats(doc)
        if stddev > cfg.sent_len_stddev_max:
            failed.append("sent_len_stddev")
        if mean < cfg.min_mean_words_per_sentence:
            failed.append("mean_words")

    placeholders = cfg.compiled_placeholders()
    per_sentence: list[tuple[int, bool, Optional[str]]] = []
    for i, sent in enumerate(doc.sentences):
        reason = _sentence_reject_reason(sent.text, cfg, placeholders)
        per_sentence.append((i, reason is None, reason))
    return FilterVerdict(kept=not failed, failed_rules=failed, per_sentence=per_sentence)


def _sentence_reject_reason(
    text: str, cfg: FilterConfig, placeholders: list[re.Pattern]
) -> Optional[str]:
    for pattern in placeholders:
        if pattern.search(text):
            return "placeholder"
    if len(text.split()) < cfg.sent_min_words:
        return "min_words"
    alpha, _, _ = _char_ratios(text)
    if alpha < cfg.min_alpha_ratio:
        return "alpha_ratio"
    return None
