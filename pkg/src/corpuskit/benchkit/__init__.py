"""Benchmark dataset curation and scoring utilities."""

from .sts import (
    AnnotationRecord,
    PairAggregate,
    aggregate_sts,
    annotator_quality,
    mine_pairs_jaccard,
    sts_score,
)
from .tc import LabeledExample, filter_and_split_tc, stratified_subsample
from .qa import QaExample, qa_score, qa_dataset_stats, DEFAULT_ARTICLES
from .ner import entity_f1, token_f1

__all__ = [
    "AnnotationRecord",
    "PairAggregate",
    "LabeledExample",
    "QaExample",
    "DEFAULT_ARTICLES",
    "aggregate_sts",
    "annotator_quality",
    "mine_pairs_jaccard",
    "sts_score",
    "filter_and_split_tc",
    "stratified_subsample",
    "qa_score",
    "qa_dataset_stats",
    "entity_f1",
    "token_f1",
]
