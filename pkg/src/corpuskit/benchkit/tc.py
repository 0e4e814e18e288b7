"""Labeled-example curation: frequency filtering, stratified splits, subsampling."""

from __future__ import annotations

import math
import random
from collections import defaultdict
from dataclasses import dataclass
from typing import Sequence

from ..errors import EmptyAfterFilter, SizeTooLarge


@dataclass
class LabeledExample:
    id: str
    text: str
    label: str

    def __post_init__(self):
        if not self.label:
            raise ValueError("label must be non-empty")


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def filter_and_split_tc(
    examples: Sequence[LabeledExample],
    min_per_label: int = 2000,
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1),
    seed: int = 0,
) -> tuple[list[LabeledExample], list[LabeledExample], list[LabeledExample]]:
    """Drop rare labels, then split stratified into (train, dev, test).

    Only labels with strictly more than ``min_per_label`` examples survive.
    Each label is shuffled deterministically under ``seed`` and split with
    round-half-up dev/test sizes, so per-label proportions match the ratios
    within one example. Ratios must sum to 1.
    """
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {ratios}")
    if any(r < 0 for r in ratios):
        raise ValueError(f"ratios must be non-negative, got {ratios}")
    by_label: dict[str, list[LabeledExample]] = defaultdict(list)
    for ex in examples:
        by_label[ex.label].append(ex)
    kept_labels = sorted(label for label, exs in by_label.items() if len(exs) > min_per_label)
    if not kept_labels:
        raise EmptyAfterFilter(f"no label has more than {min_per_label} examples")
    rng = random.Random(seed)
    train: list[LabeledExample] = []
    dev: list[LabeledExample] = []
    test: list[LabeledExample] = []
    _, r_dev, r_test = ratios
    for label in kept_labels:
        group = list(by_label[label])
        rng.shuffle(group)
        n = len(group)
        n_dev = min(_round_half_up(n * r_dev), n)
        n_test = min(_round_half_up(n * r_test), n - n_dev)
        n_train = n - n_dev - n_test
        train.extend(group[:n_train])
        dev.extend(group[n_train : n_train + n_dev])
        test.extend(group[n_train + n_dev :])
    return train, dev, test


def stratified_subsample(
    train: Sequence[LabeledExample], size: int, seed: int = 0
) -> list[LabeledExample]:
    """Subsample preserving the per-label distribution.

    Counts are assigned to labels one by one, each time to the label whose
    running allocation lags its proportional quota the most (ties go to the
    more frequent label, then lexicographic). This quota-tracking rule gives
    the same counts as rounding by largest remainder on well-behaved
    distributions, and in addition is monotone in ``size``: a smaller
    subsample is always a subset of a larger one under the same seed.
    """
    if size > len(train):
        raise SizeTooLarge(f"requested {size} of {len(train)} examples")
    if size < 0:
        raise ValueError("size must be >= 0")
    by_label: dict[str, list[LabeledExample]] = defaultdict(list)
    for ex in train:
        by_label[ex.label].append(ex)
    labels = sorted(by_label)
    rng = random.Random(seed)
    for label in labels:
        rng.shuffle(by_label[label])
    total = len(train)
    counts = {label: len(by_label[label]) for label in labels}
    alloc = {label: 0 for label in labels}
    for t in range(1, size + 1):
        best = min(
            labels,
            key=lambda lb: (-(counts[lb] * t / total - alloc[lb]), -counts[lb], lb),
        )
        alloc[best] += 1
    out: list[LabeledExample] = []
    for label in labels:
        out.extend(by_label[label][: alloc[label]])
    return out
