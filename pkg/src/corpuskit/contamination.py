"""Measure and remove overlap between a corpus and evaluation sets.

An evaluation index collects every sentence that occurs anywhere in the
declared benchmark files (sentence pairs, questions, segmented contexts and
article bodies). Corpus sentences whose canonical form appears in the index
are contaminated; decontamination removes exactly those sentences, so a
report on the result is zero by construction. Sentence canonicalization is
the single implementation shared with dedup (:func:`dedup.normalize_sentence`).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator, Optional

from .docmodel import Document, Sentence, evolve
from .dedup import normalize_sentence
from .errors import MalformedEvalFile
from .sentfilters import split_sentences

EVAL_FORMATS = ("sts", "tc", "qa", "lines")


@dataclass
class EvalIndex:
    """Normalized sentences of one or more evaluation sets."""

    name: str = "eval"
    normalized: bool = True
    by_set: dict[str, set[str]] = field(default_factory=dict)

    @property
    def sentences(self) -> set[str]:
        out: set[str] = set()
        for s in self.by_set.values():
            out |= s
        return out

    @property
    def source_counts(self) -> dict[str, int]:
        return {name: len(s) for name, s in self.by_set.items()}

    def __len__(self) -> int:
        return len(self.sentences)

    def key(self, text: str) -> str:
        return normalize_sentence(text) if self.normalized else text

    def matches(self, sentence_text: str) -> list[str]:
        """Names of the eval sets containing this sentence (sorted)."""
        k = self.key(sentence_text)
        if not k:
            return []
        return sorted(name for name, s in self.by_set.items() if k in s)

    def __contains__(self, sentence_text: str) -> bool:
        k = self.key(sentence_text)
        return bool(k) and any(k in s for s in self.by_set.values())


def build_eval_index(
    eval_files: Iterable[tuple],
    name: str = "eval",
    normalized: bool = True,
) -> EvalIndex:
    """Index the sentences of evaluation files.

    ``eval_files`` holds (name, path) or (name, path, format) tuples with
    format one of ``sts`` (tab-separated sentence pairs), ``tc``
    (tab-separated labeled articles), ``qa`` (nested JSON) or ``lines`` (one
    sentence per line). Without an explicit format, ``.json`` files are read
    as qa and everything else as lines. Contexts and article bodies are
    segmented into sentences; questions and pair sentences are used whole.
    """
    index = EvalIndex(name=name, normalized=normalized)
    for entry in eval_files:
        if len(entry) == 2:
            set_name, path = entry
            fmt = None
        else:
            set_name, path, fmt = entry
        path = Path(path)
        if fmt is None:
            fmt = "qa" if path.suffix.lower() == ".json" else "lines"
        if fmt not in EVAL_FORMATS:
            raise MalformedEvalFile(f"unknown eval format {fmt!r} for {path}")
        sentences = index.by_set.setdefault(set_name, set())
        for text in _iter_eval_sentences(path, fmt):
            k = index.key(text)
            if k:
                sentences.add(k)
    if not any(index.by_set.values()):
        raise MalformedEvalFile("evaluation index is empty")
    return index


def _iter_eval_sentences(path: Path, fmt: str) -> Iterator[str]:
    try:
        raw = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise MalformedEvalFile(f"{path}: {exc}") from None
    if fmt == "lines":
        for line in raw.splitlines():
            if line.strip():
                yield line.strip()
    elif fmt == "sts":
        for i, line in enumerate(raw.splitlines()):
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) < 3:
                raise MalformedEvalFile(f"{path}:{i + 1}: expected >= 3 tab-separated columns")
            yield cols[1].strip()
            yield cols[2].strip()
    elif fmt == "tc":
        for i, line in enumerate(raw.splitlines()):
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) < 3:
                raise MalformedEvalFile(f"{path}:{i + 1}: expected >= 3 tab-separated columns")
            for sent in split_sentences(cols[2]):
                yield sent.text
    elif fmt == "qa":
        try:
            payload = json.loads(raw)
            articles = payload["data"]
        except (json.JSONDecodeError, TypeError, KeyError) as exc:
            raise MalformedEvalFile(f"{path}: not a QA JSON file ({exc})") from None
        seen_contexts: set[str] = set()
        try:
            for article in articles:
                for para in article["paragraphs"]:
                    context = para["context"]
                    if context not in seen_contexts:
                        seen_contexts.add(context)
                        for sent in split_sentences(context):
                            yield sent.text
                    for qa in para["qas"]:
                        yield qa["question"].strip()
        except (TypeError, KeyError) as exc:
            raise MalformedEvalFile(f"{path}: malformed QA structure ({exc})") from None


def _doc_sentences(doc: Document) -> list[Sentence]:
    if doc.sentences is not None:
        return [s for s in doc.sentences if s.kept]
    return split_sentences(doc.text)


@dataclass
class ContaminationReport:
    total_sentences: int = 0
    contaminated: int = 0
    per_eval_set: dict[str, int] = field(default_factory=dict)
    per_source: dict[str, dict[str, int]] = field(default_factory=dict)

    @property
    def fraction(self) -> float:
        return self.contaminated / self.total_sentences if self.total_sentences else 0.0

    def fraction_percent(self) -> str:
        """The contaminated fraction formatted as a percentage, e.g. '0.078%'."""
        return f"{100.0 * self.fraction:.3f}%"

    def summary(self) -> str:
        return (
            f"contaminated: {self.contaminated:,} out of {self.total_sentences:,} "
            f"sentences ({self.fraction_percent()})"
        )

    def to_json(self) -> str:
        payload = {
            "total_sentences": self.total_sentences,
            "contaminated": self.contaminated,
            "fraction": self.fraction,
            "fraction_percent": self.fraction_percent(),
            "per_eval_set": self.per_eval_set,
            "per_source": self.per_source,
        }
        return json.dumps(payload, ensure_ascii=False, indent=2)


def contamination_report(docs: Iterable[Document], index: EvalIndex) -> ContaminationReport:
    """Count corpus sentences whose canonical form occurs in the eval index.

    A sentence present in several eval sets counts once toward the total but
    is attributed to each set it matches. Documents without a stored
    segmentation are segmented on the fly.
    """
    report = ContaminationReport(per_eval_set={name: 0 for name in index.by_set})
    for doc in docs:
        src = report.per_source.setdefault(doc.source, {"sentences": 0, "contaminated": 0})
        for sent in _doc_sentences(doc):
            report.total_sentences += 1
            src["sentences"] += 1
            matched = index.matches(sent.text)
            if matched:
                report.contaminated += 1
                src["contaminated"] += 1
                for name in matched:
                    report.per_eval_set[name] += 1
    return report


RemovalCallback = Callable[[Document, int, list[str]], None]


def decontaminate(
    docs: Iterable[Document],
    index: EvalIndex,
    on_removal: Optional[RemovalCallback] = None,
    on_drop: Optional[Callable[[Document, int], None]] = None,
) -> Iterator[Document]:
    """Remove every sentence whose canonical form occurs in the eval index.

    ``on_removal`` receives (document, sentence index, matching eval sets)
    for each removed sentence. Documents left with no sentences are dropped.
    Modified documents get their text rebuilt from the surviving sentences,
    so running decontaminate twice is a no-op.
    """
    for doc in docs:
        had_split = doc.sentences is not None
        sentences = doc.sentences if had_split else split_sentences(doc.text)
        kept: list[Sentence] = []
        removed = 0
        for i, sent in enumerate(sentences):
            if sent.kept:
                matched = index.matches(sent.text)
                if matched:
                    removed += 1
                    if on_removal is not None:
                        on_removal(doc, i, matched)
                    continue
            kept.append(sent)
        if not any(s.kept for s in kept):
            if on_drop is not None:
                on_drop(doc, removed)
            continue
        if removed:
            text = "\n".join(s.text for s in kept if s.kept)
            yield evolve(doc, text=text, sentences=kept if had_split else None)
        else:
            yield doc
