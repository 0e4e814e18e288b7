"""Sentence-pair similarity: pair mining, annotation aggregation, scoring.

Pairs are rated by several annotators on a 0-5 scale. Aggregation takes the
mean of all ratings, discards single ratings that deviate from that mean by
more than 1 (one round, no recomputation), and averages the survivors; a
pair with fewer than two surviving ratings is degenerate and gets no score.
"""

from __future__ import annotations

import math
import warnings
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from scipy import stats as _scipy_stats

from ..errors import ZeroVariance


@dataclass
class AnnotationRecord:
    pair_id: str
    annotator_id: str
    score: float

    def __post_init__(self):
        if not 0.0 <= self.score <= 5.0:
            raise ValueError(f"score must be in [0, 5], got {self.score}")


def mine_pairs_jaccard(
    sentences: Sequence[str], min_sim: float, max_sim: float, k: int
) -> list[tuple[str, str, float]]:
    """Candidate sentence pairs by token-set Jaccard similarity.

    Returns up to ``k`` pairs with similarity in [min_sim, max_sim], highest
    similarity first, ties broken by the lexicographic order of the pair
    (the two sentences of a pair are themselves in lexicographic order).
    """
    token_sets = [frozenset(s.split()) for s in sentences]
    candidates: list[tuple[str, str, float]] = []
    for i in range(len(sentences)):
        for j in range(i + 1, len(sentences)):
            union = token_sets[i] | token_sets[j]
            if not union:
                continue
            sim = len(token_sets[i] & token_sets[j]) / len(union)
            if min_sim <= sim <= max_sim:
                a, b = sorted((sentences[i], sentences[j]))
                candidates.append((a, b, sim))
    candidates.sort(key=lambda t: (-t[2], t[0], t[1]))
    return candidates[:k]


@dataclass
class PairAggregate:
    pair_id: str
    final_score: Optional[float]
    degenerate: bool
    discarded: list[str] = field(default_factory=list)


def aggregate_sts(records: Iterable[AnnotationRecord]) -> list[PairAggregate]:
    """Aggregate per-pair annotations into final scores.

    For each pair: mean of all scores, discard annotations deviating from
    that mean by more than 1, final score is the mean of the rest. Pairs
    with fewer than two surviving annotations come back flagged degenerate
    with no score. Output is ordered by pair id and invariant under
    annotator order.
    """
    by_pair: dict[str, list[AnnotationRecord]] = defaultdict(list)
    seen: set[tuple[str, str]] = set()
    for rec in records:
        key = (rec.pair_id, rec.annotator_id)
        if key in seen:
            raise ValueError(f"duplicate annotation for {key}")
        seen.add(key)
        by_pair[rec.pair_id].append(rec)
    out: list[PairAggregate] = []
    for pair_id in sorted(by_pair):
        recs = by_pair[pair_id]
        if len(recs) < 2:
            out.append(PairAggregate(pair_id, None, True, []))
            continue
        mean = sum(r.score for r in recs) / len(recs)
        survivors = [r for r in recs if abs(r.score - mean) <= 1.0]
        discarded = sorted(r.annotator_id for r in recs if abs(r.score - mean) > 1.0)
        if len(survivors) < 2:
            out.append(PairAggregate(pair_id, None, True, discarded))
        else:
            final = sum(r.score for r in survivors) / len(survivors)
            out.append(PairAggregate(pair_id, final, False, discarded))
    return out


def _pearson(x: Sequence[float], y: Sequence[float]) -> float:
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    if sxx == 0.0 or syy == 0.0:
        raise ZeroVariance("constant vector has no correlation")
    return sxy / math.sqrt(sxx * syy)


@dataclass
class AnnotatorQuality:
    per_annotator: dict[str, Optional[float]]
    average: float
    excluded: list[str] = field(default_factory=list)


def annotator_quality(records: Iterable[AnnotationRecord]) -> AnnotatorQuality:
    """Correlation of each annotator with the mean of the other annotators.

    For every annotator, Pearson correlation between their scores and the
    per-pair mean of everyone else, over the pairs they share with at least
    one other annotator (at least 3 such pairs required). Constant
    annotators (zero variance) are reported with ``None``, excluded from the
    unweighted average, and flagged with a warning.
    """
    by_pair: dict[str, dict[str, float]] = defaultdict(dict)
    annotators: set[str] = set()
    for rec in records:
        by_pair[rec.pair_id][rec.annotator_id] = rec.score
        annotators.add(rec.annotator_id)
    per: dict[str, Optional[float]] = {}
    excluded: list[str] = []
    for ann in sorted(annotators):
        own: list[float] = []
        others: list[float] = []
        for scores in by_pair.values():
            if ann not in scores or len(scores) < 2:
                continue
            own.append(scores[ann])
            rest = [s for a, s in scores.items() if a != ann]
            others.append(sum(rest) / len(rest))
        if len(own) < 3:
            raise ValueError(f"annotator {ann!r} shares only {len(own)} pairs, need >= 3")
        try:
            per[ann] = _pearson(own, others)
        except ZeroVariance:
            per[ann] = None
            excluded.append(ann)
            warnings.warn(f"annotator {ann!r} has zero variance; excluded from the average")
    valid = [v for v in per.values() if v is not None]
    if not valid:
        raise ZeroVariance("no annotator with usable variance")
    return AnnotatorQuality(per_annotator=per, average=sum(valid) / len(valid), excluded=excluded)


def sts_score(predictions: Sequence[float], gold: Sequence[float]) -> float:
    """Average of Pearson and Spearman correlations between two score vectors.

    Spearman uses average ranks for ties. Both vectors need at least 3
    entries and non-zero variance.
    """
    if len(predictions) != len(gold):
        raise ValueError(f"length mismatch: {len(predictions)} vs {len(gold)}")
    if len(gold) < 3:
        raise ValueError("need at least 3 pairs")
    if len(set(predictions)) < 2 or len(set(gold)) < 2:
        raise ZeroVariance("constant score vector")
    pearson = _pearson(predictions, gold)
    spearman = float(_scipy_stats.spearmanr(predictions, gold).statistic)
    return (pearson + spearman) / 2.0
