"""Extractive QA scoring and dataset statistics.

Scoring follows the classic token-overlap recipe: normalize both strings
(lowercase, drop punctuation, collapse whitespace), compute exact match and
bag-of-tokens F1, take the best over the gold answers and average over
examples, in percent. The optional article discount additionally removes a
single leading article (configurable list; Catalan defaults) from both
sides before punctuation is stripped, so elided forms like ``l'`` still
match.
"""

from __future__ import annotations

import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from ..errors import MissingPrediction, UnknownId
from ..sentfilters import split_sentences

DEFAULT_ARTICLES = ("el", "la", "els", "les", "l'", "un", "una", "uns", "unes", "en", "na")


@dataclass
class QaExample:
    id: str
    context: str
    question: str
    answers: list[tuple[str, int]] = field(default_factory=list)

    def __post_init__(self):
        for text, start in self.answers:
            if self.context[start : start + len(text)] != text:
                raise ValueError(
                    f"answer {text!r} does not match context at offset {start} (example {self.id})"
                )


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def _strip_leading_article(text: str, articles: Sequence[str]) -> str:
    stripped = text.lstrip()
    for article in sorted(articles, key=len, reverse=True):
        if article.endswith("'"):
            if stripped.startswith(article) and len(stripped) > len(article):
                return stripped[len(article):]
        else:
            if stripped.startswith(article + " "):
                return stripped[len(article) + 1:]
    return stripped


def normalize_answer(text: str, articles: Optional[Sequence[str]] = None) -> str:
    """Lowercase, optionally drop one leading article, strip punctuation,
    collapse whitespace."""
    text = text.lower()
    if articles:
        text = _strip_leading_article(text, articles)
    text = "".join(ch for ch in text if not _is_punct(ch))
    return " ".join(text.split())


def _em(pred: str, gold: str) -> float:
    return 100.0 if pred == gold else 0.0


def _f1(pred: str, gold: str) -> float:
    pred_tokens = pred.split()
    gold_tokens = gold.split()
    if not pred_tokens and not gold_tokens:
        return 100.0
    common = Counter(pred_tokens) & Counter(gold_tokens)
    same = sum(common.values())
    if same == 0:
        return 0.0
    precision = same / len(pred_tokens)
    recall = same / len(gold_tokens)
    return 100.0 * 2 * precision * recall / (precision + recall)


@dataclass
class QaScore:
    f1: float
    exact_match: float


def qa_score(
    predictions: Mapping[str, str],
    gold: Sequence[QaExample],
    discount_articles: bool = False,
    articles: Sequence[str] = DEFAULT_ARTICLES,
) -> QaScore:
    """Token-overlap F1 and exact match, in percent, max over gold answers.

    Every gold example must have a prediction and every prediction id must
    exist in the gold set. Gold examples without answers are scored against
    the empty string.
    """
    gold_ids = {ex.id for ex in gold}
    for pid in predictions:
        if pid not in gold_ids:
            raise UnknownId(f"prediction id {pid!r} has no gold example")
    arts = articles if discount_articles else None
    f1_total = em_total = 0.0
    for ex in gold:
        if ex.id not in predictions:
            raise MissingPrediction(f"no prediction for gold example {ex.id!r}")
        pred = normalize_answer(predictions[ex.id], arts)
        answers = [normalize_answer(a, arts) for a, _ in ex.answers] or [""]
        em_total += max(_em(pred, a) for a in answers)
        f1_total += max(_f1(pred, a) for a in answers)
    n = len(gold)
    if n == 0:
        raise ValueError("gold set is empty")
    return QaScore(f1=f1_total / n, exact_match=em_total / n)


@dataclass
class QaStats:
    """Token statistics of a QA dataset (whitespace tokenization)."""

    articles: Optional[int]
    contexts: int
    sentences: int
    questions: int
    answers: int
    tokens_in_contexts: int
    tokens_in_questions: int
    tokens_in_answers: int

    @property
    def sentences_per_context(self) -> float:
        return self.sentences / self.contexts if self.contexts else 0.0

    @property
    def tokens_per_question(self) -> float:
        return self.tokens_in_questions / self.questions if self.questions else 0.0

    @property
    def question_context_token_ratio(self) -> float:
        return self.tokens_in_questions / self.tokens_in_contexts if self.tokens_in_contexts else 0.0

    @property
    def tokens_per_answer(self) -> float:
        return self.tokens_in_answers / self.answers if self.answers else 0.0

    @property
    def answer_context_token_ratio(self) -> float:
        return self.tokens_in_answers / self.tokens_in_contexts if self.tokens_in_contexts else 0.0

    def format_table(self) -> str:
        rows = []
        if self.articles is not None:
            rows.append(("Paragraph", f"{self.articles:,}"))
        rows += [
            ("Context", f"{self.contexts:,}"),
            ("Total sentences", f"{self.sentences:,}"),
            ("Sentences/context", f"{self.sentences_per_context:.2f}"),
            ("Tokens in context", f"{self.tokens_in_contexts:,}"),
            ("Tokens in questions", f"{self.tokens_in_questions:,}"),
            ("Tokens in questions/questions", f"{self.tokens_per_question:.2f}"),
            ("Tokens in questions/tokens in context", f"{self.question_context_token_ratio:.2f}"),
            ("Tokens in answers", f"{self.tokens_in_answers:,}"),
            ("Tokens in answers/answers", f"{self.tokens_per_answer:.2f}"),
            ("Tokens in answers/tokens in context", f"{self.answer_context_token_ratio:.2f}"),
        ]
        width = max(len(label) for label, _ in rows)
        return "\n".join(f"{label:<{width}}  {value}" for label, value in rows)


def qa_dataset_stats(examples: Iterable[QaExample], articles: Optional[int] = None) -> QaStats:
    """Aggregate token statistics over a QA dataset.

    Contexts are deduplicated by exact string before counting (several
    questions usually share one context); questions and answers count every
    occurrence. ``articles`` is the number of source articles when the
    loader knows it.
    """
    examples = list(examples)
    if not examples:
        raise ValueError("no examples")
    seen_contexts: list[str] = []
    seen_set: set[str] = set()
    questions = 0
    answers = 0
    tokens_q = 0
    tokens_a = 0
    for ex in examples:
        if ex.context not in seen_set:
            seen_set.add(ex.context)
            seen_contexts.append(ex.context)
        questions += 1
        tokens_q += len(ex.question.split())
        for text, _ in ex.answers:
            answers += 1
            tokens_a += len(text.split())
    sentences = sum(len(split_sentences(ctx)) for ctx in seen_contexts)
    tokens_ctx = sum(len(ctx.split()) for ctx in seen_contexts)
    return QaStats(
        articles=articles,
        contexts=len(seen_contexts),
        sentences=sentences,
        questions=questions,
        answers=answers,
        tokens_in_contexts=tokens_ctx,
        tokens_in_questions=tokens_q,
        tokens_in_answers=tokens_a,
    )
