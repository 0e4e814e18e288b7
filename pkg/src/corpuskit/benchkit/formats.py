"""Readers and writers for the benchmark file formats.

All tab-separated files are headerless UTF-8 with one record per line;
fields must not contain tabs or newlines. QA datasets use the standard
nested JSON layout (data → paragraphs → qas with answers/answer_start).
Tagged sequences use the CoNLL column convention: one token per line, tag
in the last whitespace-separated column, blank line between sentences.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from ..errors import MalformedEvalFile
from .qa import QaExample
from .sts import AnnotationRecord
from .tc import LabeledExample


@dataclass
class StsPair:
    pair_id: str
    sentence_a: str
    sentence_b: str
    score: Optional[float] = None


def _rows(path: str | Path, n_cols: int, what: str) -> list[list[str]]:
    rows = []
    for i, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines()):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) < n_cols:
            raise MalformedEvalFile(f"{path}:{i + 1}: {what} needs {n_cols} tab-separated columns")
        rows.append(cols)
    return rows


def read_sts_pairs(path: str | Path) -> list[StsPair]:
    """TSV: pair_id, sentence_a, sentence_b[, score]."""
    pairs = []
    for cols in _rows(path, 3, "sts pair"):
        score = float(cols[3]) if len(cols) > 3 and cols[3] != "" else None
        pairs.append(StsPair(cols[0], cols[1], cols[2], score))
    return pairs


def write_sts_pairs(path: str | Path, pairs: Sequence[StsPair]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in pairs:
            score = "" if p.score is None else f"{p.score:g}"
            fh.write(f"{p.pair_id}\t{p.sentence_a}\t{p.sentence_b}\t{score}\n")


def read_annotations(path: str | Path) -> list[AnnotationRecord]:
    """TSV: pair_id, annotator_id, score."""
    out = []
    for cols in _rows(path, 3, "annotation"):
        try:
            score = float(cols[2])
        except ValueError:
            raise MalformedEvalFile(f"{path}: bad score {cols[2]!r}") from None
        out.append(AnnotationRecord(cols[0], cols[1], score))
    return out


def write_annotations(path: str | Path, records: Sequence[AnnotationRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(f"{r.pair_id}\t{r.annotator_id}\t{r.score:g}\n")


def read_tc_examples(path: str | Path) -> list[LabeledExample]:
    """TSV: id, label, text."""
    return [LabeledExample(cols[0], cols[2], cols[1]) for cols in _rows(path, 3, "labeled example")]


def write_tc_examples(path: str | Path, examples: Sequence[LabeledExample]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(f"{ex.id}\t{ex.label}\t{ex.text}\n")


@dataclass
class QaDataset:
    examples: list[QaExample]
    n_articles: int


def read_qa_json(path: str | Path) -> QaDataset:
    """Load the nested QA JSON into flat examples plus the article count."""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        articles = payload["data"]
    except (OSError, json.JSONDecodeError, TypeError, KeyError) as exc:
        raise MalformedEvalFile(f"{path}: {exc}") from None
    examples: list[QaExample] = []
    try:
        for article in articles:
            for para in article["paragraphs"]:
                context = para["context"]
                for qa in para["qas"]:
                    answers = [(a["text"], int(a["answer_start"])) for a in qa.get("answers", [])]
                    examples.append(QaExample(qa["id"], context, qa["question"], answers))
    except (TypeError, KeyError) as exc:
        raise MalformedEvalFile(f"{path}: malformed QA structure ({exc})") from None
    except ValueError as exc:
        raise MalformedEvalFile(f"{path}: {exc}") from None
    return QaDataset(examples=examples, n_articles=len(articles))


def write_qa_json(path: str | Path, dataset: QaDataset, title_prefix: str = "article") -> None:
    """Write flat examples back to the nested layout, grouping by context."""
    paragraphs: list[dict] = []
    by_context: dict[str, dict] = {}
    for ex in dataset.examples:
        para = by_context.get(ex.context)
        if para is None:
            para = {"context": ex.context, "qas": []}
            by_context[ex.context] = para
            paragraphs.append(para)
        para["qas"].append(
            {
                "id": ex.id,
                "question": ex.question,
                "answers": [{"text": t, "answer_start": s} for t, s in ex.answers],
            }
        )
    payload = {"data": [{"title": title_prefix, "paragraphs": paragraphs}]}
    Path(path).write_text(json.dumps(payload, ensure_ascii=False, indent=1), encoding="utf-8")


def read_predictions_json(path: str | Path) -> dict[str, str]:
    """QA predictions: a JSON object mapping example id to answer text."""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedEvalFile(f"{path}: {exc}") from None
    if not isinstance(payload, dict):
        raise MalformedEvalFile(f"{path}: expected a JSON object of id -> answer")
    return {str(k): str(v) for k, v in payload.items()}


def read_conll(path: str | Path) -> list[tuple[list[str], list[str]]]:
    """CoNLL columns -> list of (tokens, tags) sequences."""
    sequences: list[tuple[list[str], list[str]]] = []
    tokens: list[str] = []
    tags: list[str] = []
    for i, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines()):
        line = line.strip()
        if not line:
            if tokens:
                sequences.append((tokens, tags))
                tokens, tags = [], []
            continue
        cols = line.split()
        if len(cols) < 2:
            raise MalformedEvalFile(f"{path}:{i + 1}: need token and tag columns")
        tokens.append(cols[0])
        tags.append(cols[-1])
    if tokens:
        sequences.append((tokens, tags))
    return sequences


def write_conll(path: str | Path, sequences: Sequence[tuple[list[str], list[str]]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for tokens, tags in sequences:
            for token, tag in zip(tokens, tags):
                fh.write(f"{token} {tag}\n")
            fh.write("\n")
