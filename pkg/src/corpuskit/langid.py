"""Language identification with a cascade of character n-gram classifiers.

The built-in classifier is a multinomial over character n-grams with
add-one smoothing. A cascade runs a cheap low-order classifier first to
discard documents that are clearly not in the target language, then a
higher-order (slower, more accurate) classifier on the survivors. Profiles
are trained from per-language sample text and are immutable afterwards, so
prediction is safe to parallelize.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .docmodel import Document, Sentence
from .errors import EmptyText, InsufficientData, UnreadableInput

MIN_SAMPLE_CHARS = 1000
PROFILE_FORMAT_VERSION = 1

# Default cascade thresholds: permissive on the fast stage, strict on the
# slow one.
FAST_MIN_PROB = 0.3
SLOW_MIN_PROB = 0.7
FAST_N_RANGE = (1, 2)
SLOW_N_RANGE = (1, 5)


@dataclass
class LangPrediction:
    lang: str
    prob: float


@dataclass
class NGramProfile:
    """Smoothed character n-gram statistics for one language.

    ``log_probs`` maps each observed n-gram to its log probability;
    ``smoothing_mass`` is the probability assigned to any unseen n-gram.
    """

    lang: str
    n_range: tuple[int, int]
    log_probs: dict[str, float]
    smoothing_mass: float


def _prepare(text: str) -> str:
    return " " + " ".join(text.lower().split()) + " "


def _char_ngrams(text: str, n_range: tuple[int, int]) -> Counter:
    prepared = _prepare(text)
    counts: Counter = Counter()
    for n in range(n_range[0], n_range[1] + 1):
        if len(prepared) < n:
            continue
        counts.update(prepared[i : i + n] for i in range(len(prepared) - n + 1))
    return counts


def train_profile(
    samples: Iterable[tuple[str, str]], n_range: tuple[int, int] = SLOW_N_RANGE
) -> list[NGramProfile]:
    """Train one profile per language from (lang, text) samples.

    Requires at least two languages and at least 1,000 characters of sample
    text per language. Smoothing vocabulary is the union of n-grams seen in
    any language, plus one slot reserved for wholly unseen n-grams.
    """
    if not (1 <= n_range[0] <= n_range[1] <= 5):
        raise ValueError(f"n_range must satisfy 1 <= min <= max <= 5, got {n_range}")
    texts: dict[str, list[str]] = {}
    for lang, text in samples:
        texts.setdefault(lang, []).append(text)
    if len(texts) < 2:
        raise InsufficientData(f"need samples for at least 2 languages, got {len(texts)}")
    for lang, parts in texts.items():
        total = sum(len(p) for p in parts)
        if total < MIN_SAMPLE_CHARS:
            raise InsufficientData(
                f"language {lang!r} has {total} sample characters, need >= {MIN_SAMPLE_CHARS}"
            )
    counts = {lang: _char_ngrams("\n".join(parts), n_range) for lang, parts in texts.items()}
    vocab_size = len(set().union(*[set(c) for c in counts.values()])) + 1
    profiles = []
    for lang in sorted(counts):
        c = counts[lang]
        total = sum(c.values())
        denom = total + vocab_size
        log_probs = {g: math.log((k + 1) / denom) for g, k in c.items()}
        profiles.append(
            NGramProfile(lang=lang, n_range=n_range, log_probs=log_probs, smoothing_mass=1.0 / denom)
        )
    return profiles


def train_from_dir(samples_dir: str | Path, n_range: tuple[int, int] = SLOW_N_RANGE) -> list[NGramProfile]:
    """Train profiles from a ``<dir>/<lang>/*.txt`` sample layout."""
    samples_dir = Path(samples_dir)
    if not samples_dir.is_dir():
        raise UnreadableInput(f"not a directory: {samples_dir}")
    samples = []
    for lang_dir in sorted(p for p in samples_dir.iterdir() if p.is_dir()):
        for txt in sorted(lang_dir.glob("*.txt")):
            samples.append((lang_dir.name, txt.read_text(encoding="utf-8")))
    return train_profile(samples, n_range)


class NGramClassifier:
    """Posterior language prediction over a fixed set of trained profiles.

    ``max_chars`` bounds the text prefix that is scored; document-level
    identification saturates quickly, and the bound keeps the cascade cheap
    on long documents. ``None`` scores the full text.
    """

    def __init__(self, profiles: Sequence[NGramProfile], max_chars: Optional[int] = None):
        if not profiles:
            raise ValueError("classifier needs at least one profile")
        ranges = {p.n_range for p in profiles}
        if len(ranges) != 1:
            raise ValueError(f"profiles mix n_ranges: {sorted(ranges)}")
        self.profiles = list(profiles)
        self.langs = [p.lang for p in self.profiles]
        self.n_range = self.profiles[0].n_range
        self.max_chars = max_chars
        self._default = np.array([math.log(p.smoothing_mass) for p in self.profiles])
        merged: dict[str, np.ndarray] = {}
        for idx, p in enumerate(self.profiles):
            for gram, lp in p.log_probs.items():
                vec = merged.get(gram)
                if vec is None:
                    vec = self._default.copy()
                    merged[gram] = vec
                vec[idx] = lp
        self._merged = merged

    def predict(self, text: str) -> list[LangPrediction]:
        """Ranked posterior over the profile languages (uniform prior)."""
        text = text.strip()
        if not text:
            raise EmptyText("cannot identify the language of empty text")
        if self.max_chars is not None:
            text = text[: self.max_chars]
        counts = _char_ngrams(text, self.n_range)
        totals = np.zeros(len(self.profiles))
        missing = 0
        for gram, k in counts.items():
            vec = self._merged.get(gram)
            if vec is None:
                missing += k
            else:
                totals += k * vec
        totals += missing * self._default
        totals -= totals.max()
        probs = np.exp(totals)
        probs /= probs.sum()
        ranked = sorted(zip(self.langs, probs), key=lambda kv: (-kv[1], kv[0]))
        return [LangPrediction(lang, float(p)) for lang, p in ranked]

    def prob_of(self, text: str, lang: str) -> float:
        return next((p.prob for p in self.predict(text) if p.lang == lang), 0.0)


def predict(profiles: Sequence[NGramProfile], text: str) -> list[LangPrediction]:
    """One-shot prediction without building a classifier by hand."""
    return NGramClassifier(profiles).predict(text)


@dataclass
class StageTrace:
    stage: int
    target_lang: str
    target_prob: float
    min_prob: float
    passed: bool


@dataclass
class CascadeDecision:
    kept: bool
    trace: list[StageTrace] = field(default_factory=list)

    @property
    def dropped_at(self) -> Optional[int]:
        return next((t.stage for t in self.trace if not t.passed), None)


def cascade_filter(
    doc: Document, stages: Sequence[tuple[NGramClassifier, str, float]]
) -> CascadeDecision:
    """Run the classifier cascade on one document.

    The document is dropped at the first stage whose probability for that
    stage's target language falls below the stage threshold; later stages
    never run. The trace records every stage that was consulted.
    """
    if not stages:
        raise ValueError("cascade needs at least one stage")
    trace: list[StageTrace] = []
    for i, (classifier, target_lang, min_prob) in enumerate(stages):
        prob = classifier.prob_of(doc.text, target_lang)
        passed = prob >= min_prob
        trace.append(StageTrace(i, target_lang, prob, min_prob, passed))
        if not passed:
            return CascadeDecision(kept=False, trace=trace)
    return CascadeDecision(kept=True, trace=trace)


# Sentences shorter than this are too little evidence to flag reliably.
MIN_SENTENCE_CHECK_CHARS = 20


def mark_foreign_sentences(
    doc: Document, classifier: NGramClassifier, target_lang: str, min_prob: float
) -> Document:
    """Flag sentences that are probably not in the target language.

    Returns a copy of the document whose foreign sentences have
    ``kept=False`` and reason ``"language"``. The document itself is never
    dropped here; that is the cascade's job.
    """
    if not doc.sentences:
        return doc
    out: list[Sentence] = []
    for sent in doc.sentences:
        if sent.kept and len(sent.text) >= MIN_SENTENCE_CHECK_CHARS:
            if classifier.prob_of(sent.text, target_lang) < min_prob:
                out.append(Sentence(sent.text, kept=False, reject_reason="language"))
                continue
        out.append(sent)
    from .docmodel import evolve

    return evolve(doc, sentences=out)


def save_profiles(path: str | Path, profiles: Sequence[NGramProfile]) -> None:
    """Write profiles as versioned JSON."""
    if not profiles:
        raise ValueError("nothing to save")
    payload = {
        "version": PROFILE_FORMAT_VERSION,
        "n_range": list(profiles[0].n_range),
        "profiles": [
            {"lang": p.lang, "smoothing_mass": p.smoothing_mass, "log_probs": p.log_probs}
            for p in profiles
        ],
    }
    Path(path).write_text(json.dumps(payload, ensure_ascii=False), encoding="utf-8")


def load_profiles(path: str | Path) -> list[NGramProfile]:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UnreadableInput(f"{path}: {exc}") from None
    if payload.get("version") != PROFILE_FORMAT_VERSION:
        raise UnreadableInput(f"{path}: unsupported profile version {payload.get('version')!r}")
    n_range = tuple(payload["n_range"])
    return [
        NGramProfile(
            lang=p["lang"],
            n_range=n_range,  # type: ignore[arg-type]
            log_probs=p["log_probs"],
            smoothing_mass=p["smoothing_mass"],
        )
        for p in payload["profiles"]
    ]
