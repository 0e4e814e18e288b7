"""corpuskit: corpus curation for language-model pretraining.

Cleaning pipeline (encoding repair, HTML stripping, language cascade,
sentence filters, two-level dedup, eval-set decontamination) with per-stage
accounting, plus benchmark curation and scoring utilities.
"""

from .docmodel import (
    Document,
    Sentence,
    StageRecord,
    deserialize_document,
    read_corpus,
    serialize_document,
    write_corpus,
)
from .transforms import fix_encoding, normalize_spaces, strip_html
from .sentfilters import FilterConfig, FilterVerdict, apply_filters, split_sentences
from .langid import NGramClassifier, cascade_filter, predict, train_profile
from .dedup import (
    SentenceCounter,
    ShingleIndex,
    count_sentences,
    duplicate_ratio,
    normalize_sentence,
    onion_dedup,
    sentence_dedup,
)
from .contamination import EvalIndex, build_eval_index, contamination_report, decontaminate
from .tokstats import (
    BpeTokenizer,
    WordPieceTokenizer,
    bpe_encode,
    subwords_per_sentence,
    vocab_overlap,
    wordpiece_encode,
)
from .ingest import SourceSpec, read_manifest, read_source
from .pipeline import PipelineConfig, StageReport, load_config, run_pipeline, sample_splits

__version__ = "0.1.0"

__all__ = [
    "Document",
    "Sentence",
    "StageRecord",
    "serialize_document",
    "deserialize_document",
    "read_corpus",
    "write_corpus",
    "fix_encoding",
    "normalize_spaces",
    "strip_html",
    "FilterConfig",
    "FilterVerdict",
    "split_sentences",
    "apply_filters",
    "NGramClassifier",
    "train_profile",
    "predict",
    "cascade_filter",
    "ShingleIndex",
    "SentenceCounter",
    "duplicate_ratio",
    "onion_dedup",
    "count_sentences",
    "sentence_dedup",
    "normalize_sentence",
    "EvalIndex",
    "build_eval_index",
    "contamination_report",
    "decontaminate",
    "BpeTokenizer",
    "WordPieceTokenizer",
    "bpe_encode",
    "wordpiece_encode",
    "subwords_per_sentence",
    "vocab_overlap",
    "SourceSpec",
    "read_source",
    "read_manifest",
    "PipelineConfig",
    "StageReport",
    "load_config",
    "run_pipeline",
    "sample_splits",
    "__version__",
]
