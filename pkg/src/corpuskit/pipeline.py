"""Declarative pipeline: staged cleaning with full per-stage accounting.

A pipeline is a source list plus an ordered stage list. Stages communicate
through JSON-lines files under the output directory (one file per stage
boundary), every drop and sentence removal is logged, and the final report
counts documents, sentences and whitespace tokens per source and stage.

Per-document stages (transforms, langid, sentsplit, filters) are pure and
can run on a worker pool; order is restored before the sequential dedup
stages, and a run with one worker is byte-identical to a run with any other
worker count.
"""

from __future__ import annotations

import json
import logging
import random
import shutil
from dataclasses import dataclass, field
from multiprocessing import Pool
from pathlib import Path
from typing import IO, Iterable, Iterator, Optional, Sequence

import yaml

from . import dedup as dedup_mod
from .contamination import EvalIndex, build_eval_index, decontaminate
from .docmodel import (
    DEFAULT_MAX_RECORD_BYTES,
    Document,
    evolve,
    read_corpus,
    serialize_document,
    with_history,
)
from .errors import ConfigError, NotEnoughDocuments
from .ingest import ReadStats, SourceSpec, read_manifest, read_source
from .langid import (
    FAST_MIN_PROB,
    FAST_N_RANGE,
    SLOW_MIN_PROB,
    SLOW_N_RANGE,
    CascadeDecision,
    NGramClassifier,
    cascade_filter,
    load_profiles,
    mark_foreign_sentences,
    train_from_dir,
)
from .sentfilters import (
    DEFAULT_ABBREVIATIONS,
    FilterConfig,
    apply_filters,
    load_abbreviations,
    split_sentences,
)

log = logging.getLogger("corpuskit.pipeline")

STAGE_NAMES = (
    "transforms",
    "langid",
    "sentsplit",
    "filters",
    "sentence_dedup",
    "onion_dedup",
    "decontaminate",
)
_MAP_STAGES = ("transforms", "langid", "sentsplit", "filters")
_DEDUP_STAGES = ("sentence_dedup", "onion_dedup")


@dataclass
class PipelineConfig:
    sources: list[SourceSpec]
    stages: list[tuple[str, dict]]
    target_lang: str = ""
    seed: int = 0
    output_dir: str = "out"
    corpus_name: str = "corpus"
    workers: int = 1
    max_record_bytes: int = DEFAULT_MAX_RECORD_BYTES


def load_config(path: str | Path) -> PipelineConfig:
    """Read a pipeline config from a YAML file (see README for the schema)."""
    try:
        payload = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    if not isinstance(payload, dict):
        raise ConfigError(f"{path}: config must be a mapping")
    return config_from_dict(payload, base_dir=Path(path).parent)


def config_from_dict(payload: dict, base_dir: Optional[Path] = None) -> PipelineConfig:
    base_dir = base_dir or Path(".")

    def _resolve(p) -> str:
        p = Path(str(p))
        return str(p if p.is_absolute() else base_dir / p)

    sources: list[SourceSpec] = []
    if "manifest" in payload:
        sources.extend(read_manifest(_resolve(payload["manifest"])))
    for raw in payload.get("sources", []) or []:
        try:
            sources.append(
                SourceSpec(name=raw["name"], format=raw["format"], path=_resolve(raw["path"]))
            )
        except (TypeError, KeyError) as exc:
            raise ConfigError(f"source entry needs name/format/path: {raw!r} ({exc})") from None
    stages: list[tuple[str, dict]] = []
    for raw in payload.get("stages", []) or []:
        if isinstance(raw, str):
            stages.append((raw, {}))
        elif isinstance(raw, dict) and len(raw) == 1:
            name, params = next(iter(raw.items()))
            stages.append((name, dict(params or {})))
        else:
            raise ConfigError(f"stage entry must be a name or a one-key mapping: {raw!r}")
    path_params = {"samples_dir", "profiles", "fast_profiles", "slow_profiles", "abbreviations_file"}
    for _, params in stages:
        for key in list(params):
            if key in path_params and params[key]:
                params[key] = _resolve(params[key])
            if key == "eval_files":
                params[key] = [
                    (e[0], _resolve(e[1]), *e[2:]) if isinstance(e, (list, tuple)) else e
                    for e in params[key]
                ]
    cfg = PipelineConfig(
        sources=sources,
        stages=stages,
        target_lang=str(payload.get("target_lang", "")),
        seed=int(payload.get("seed", 0)),
        output_dir=_resolve(payload.get("output_dir", "out")),
        corpus_name=str(payload.get("corpus_name", "corpus")),
        workers=int(payload.get("workers", 1)),
        max_record_bytes=int(payload.get("max_record_bytes", DEFAULT_MAX_RECORD_BYTES)),
    )
    validate_config(cfg)
    return cfg


def validate_config(cfg: PipelineConfig) -> None:
    if not cfg.sources:
        raise ConfigError("no sources configured")
    if cfg.workers < 1:
        raise ConfigError(f"workers must be >= 1, got {cfg.workers}")
    names = [name for name, _ in cfg.stages]
    unknown = [n for n in names if n not in STAGE_NAMES]
    if unknown:
        raise ConfigError(f"unknown stages: {unknown}; valid stages are {list(STAGE_NAMES)}")
    dupes = {n for n in names if names.count(n) > 1}
    if dupes:
        raise ConfigError(f"stages configured more than once: {sorted(dupes)}")

    def _index(name: str) -> Optional[int]:
        return names.index(name) if name in names else None

    li, fi, si = _index("langid"), _index("filters"), _index("sentsplit")
    if li is not None and fi is not None and li > fi:
        raise ConfigError("langid must precede filters")
    for ded in _DEDUP_STAGES:
        di = _index(ded)
        if di is not None and fi is not None and di < fi:
            raise ConfigError(f"{ded} must follow filters")
    for needs_split in ("filters", "sentence_dedup"):
        ni = _index(needs_split)
        if ni is not None and (si is None or si > ni):
            raise ConfigError(f"{needs_split} requires sentsplit earlier in the stage list")
    for name, params in cfg.stages:
        if name == "langid":
            if not cfg.target_lang:
                raise ConfigError("langid stage requires target_lang")
            if not any(params.get(k) for k in ("samples_dir", "fast_profiles", "slow_profiles")):
                raise ConfigError("langid stage needs samples_dir or profile files")
            if params.get("sentence_check") and (si is None or si > names.index("langid")):
                raise ConfigError("langid sentence_check requires sentsplit before langid")
        if name == "decontaminate" and not params.get("eval_files"):
            raise ConfigError("decontaminate stage needs eval_files")


# ---------------------------------------------------------------------------
# accounting
# ---------------------------------------------------------------------------


@dataclass
class StageCounts:
    docs_in: int = 0
    docs_out: int = 0
    docs_dropped: int = 0
    sents_in: int = 0
    sents_out: int = 0
    sents_removed: int = 0
    sents_dropped: int = 0
    tokens_in: int = 0
    tokens_out: int = 0
    tokens_removed: int = 0
    tokens_dropped: int = 0

    def add_in(self, doc: Document) -> None:
        self.docs_in += 1
        self.sents_in += len(doc.sentences or [])
        self.tokens_in += doc.token_count()

    def add_out(self, doc: Document) -> None:
        self.docs_out += 1
        self.sents_out += len(doc.sentences or [])
        self.tokens_out += doc.token_count()

    def add_dropped(self, doc: Document) -> None:
        self.docs_dropped += 1
        self.sents_dropped += len(doc.sentences or [])
        self.tokens_dropped += doc.token_count()


@dataclass
class StageReport:
    """Per-(source, stage) accounting for a pipeline run."""

    sources: list[str]
    stages: list[str]
    corpus_name: str = "corpus"
    rows: dict[tuple[str, str], StageCounts] = field(default_factory=dict)
    ingest_skipped: dict[str, dict[str, int]] = field(default_factory=dict)

    def counts(self, source: str, stage: str) -> StageCounts:
        key = (source, stage)
        if key not in self.rows:
            self.rows[key] = StageCounts()
        return self.rows[key]

    def stage_total(self, stage: str) -> StageCounts:
        total = StageCounts()
        for source in self.sources:
            row = self.rows.get((source, stage))
            if row is None:
                continue
            for fname in StageCounts.__dataclass_fields__:
                setattr(total, fname, getattr(total, fname) + getattr(row, fname))
        return total

    def _last_filter_stage(self) -> Optional[str]:
        passes = [s for s in self.stages if s in _MAP_STAGES and s != "ingest"]
        return passes[-1] if passes else None

    def format_text(self) -> str:
        """Aligned report: per-source token totals before/after filtering,
        then the post-deduplication total, then detailed per-stage counts."""
        lines: list[str] = []
        last_filter = self._last_filter_stage()
        final_stage = self.stages[-1] if len(self.stages) > 1 else None
        name_w = max([len("Source"), len(f"Deduplicated ({self.corpus_name})")] +
                     [len(s) for s in self.sources])
        lines.append("Tokens (millions) before and after filtering")
        lines.append(f"{'Source':<{name_w}}  {'Original':>10}  {'Final':>10}")
        total_in = total_out = 0
        for source in self.sources:
            row_in = self.rows.get((source, "ingest"), StageCounts())
            tokens_in = row_in.tokens_out
            tokens_out = tokens_in
            if last_filter is not None:
                row_out = self.rows.get((source, last_filter), StageCounts())
                tokens_out = row_out.tokens_out
            total_in += tokens_in
            total_out += tokens_out
            lines.append(
                f"{source:<{name_w}}  {tokens_in / 1e6:>10,.2f}  {tokens_out / 1e6:>10,.2f}"
            )
        lines.append(f"{'Total':<{name_w}}  {total_in / 1e6:>10,.2f}  {total_out / 1e6:>10,.2f}")
        if final_stage is not None and final_stage not in (last_filter, "ingest"):
            dedup_total = self.stage_total(final_stage).tokens_out
            label = f"Deduplicated ({self.corpus_name})"
            lines.append(f"{label:<{name_w}}  {'':>10}  {dedup_total / 1e6:>10,.2f}")
        lines.append("")
        lines.append("Per-stage counts")
        header = (
            f"{'stage':<15} {'source':<{name_w}} {'docs_in':>9} {'docs_out':>9} "
            f"{'sents_in':>10} {'sents_out':>10} {'tokens_in':>12} {'tokens_out':>12}"
        )
        lines.append(header)
        for stage in self.stages:
            for source in self.sources:
                row = self.rows.get((source, stage))
                if row is None:
                    continue
                lines.append(
                    f"{stage:<15} {source:<{name_w}} {row.docs_in:>9} {row.docs_out:>9} "
                    f"{row.sents_in:>10} {row.sents_out:>10} {row.tokens_in:>12} {row.tokens_out:>12}"
                )
        return "\n".join(lines)

    def to_json(self) -> str:
        payload = {
            "corpus_name": self.corpus_name,
            "sources": self.sources,
            "stages": self.stages,
            "rows": [
                {"source": source, "stage": stage, **vars(self.rows[(source, stage)])}
                for stage in self.stages
                for source in self.sources
                if (source, stage) in self.rows
            ],
            "ingest_skipped": self.ingest_skipped,
        }
        return json.dumps(payload, ensure_ascii=False, indent=2)


# ---------------------------------------------------------------------------
# per-document stage callables (picklable for the worker pool)
# ---------------------------------------------------------------------------


@dataclass
class MapResult:
    """Outcome of one document through a map stage.

    Carries the input-side counts so the driver never needs to hold on to
    the input document; results stream back in input order.
    """

    source: str
    in_sents: int
    in_tokens: int
    doc: Optional[Document]
    drop: Optional[dict] = None
    removals: list[dict] = field(default_factory=list)
    sents_removed: int = 0
    tokens_removed: int = 0


def _result(doc_in: Document, doc_out: Optional[Document], **kwargs) -> MapResult:
    return MapResult(
        source=doc_in.source,
        in_sents=len(doc_in.sentences or []),
        in_tokens=doc_in.token_count(),
        doc=doc_out,
        **kwargs,
    )


class TransformsStage:
    def __init__(self, params: dict):
        self.do_fix = bool(params.get("fix_encoding", True))
        self.do_html = bool(params.get("strip_html", True))
        self.do_spaces = bool(params.get("normalize_spaces", True))

    def __call__(self, doc: Document) -> MapResult:
        from .transforms import fix_encoding, normalize_spaces, strip_html

        text = doc.text
        if self.do_fix:
            text = fix_encoding(text)
        if self.do_html:
            text = strip_html(text)
        if self.do_spaces:
            text = normalize_spaces(text)
        if text == doc.text:
            return _result(doc, with_history(doc, "transforms", "kept"))
        return _result(doc, with_history(evolve(doc, text=text), "transforms", "modified"))


class LangidStage:
    def __init__(self, params: dict, target_lang: str):
        self.target_lang = target_lang
        max_chars = params.get("max_chars", 1000)
        fast: Optional[NGramClassifier] = None
        slow: Optional[NGramClassifier] = None
        if params.get("samples_dir"):
            fast = NGramClassifier(train_from_dir(params["samples_dir"], FAST_N_RANGE), max_chars)
            slow = NGramClassifier(train_from_dir(params["samples_dir"], SLOW_N_RANGE), max_chars)
        else:
            if params.get("fast_profiles"):
                fast = NGramClassifier(load_profiles(params["fast_profiles"]), max_chars)
            if params.get("slow_profiles"):
                slow = NGramClassifier(load_profiles(params["slow_profiles"]), max_chars)
        stages = []
        if fast is not None:
            stages.append((fast, target_lang, float(params.get("fast_min_prob", FAST_MIN_PROB))))
        if slow is not None:
            stages.append((slow, target_lang, float(params.get("slow_min_prob", SLOW_MIN_PROB))))
        if not stages:
            raise ConfigError("langid stage has no usable classifier")
        self.stages = stages
        self.sentence_check = bool(params.get("sentence_check", False))
        self.sentence_min_prob = float(params.get("sentence_min_prob", SLOW_MIN_PROB))

    def __call__(self, doc: Document) -> MapResult:
        if not doc.text.strip():
            drop = {"doc_id": doc.id, "stage": "langid", "decision": "dropped", "reason": "empty"}
            return _result(doc, None, drop=drop)
        decision: CascadeDecision = cascade_filter(doc, self.stages)
        if not decision.kept:
            failed = decision.trace[-1]
            drop = {
                "doc_id": doc.id,
                "stage": "langid",
                "decision": "dropped",
                "reason": f"lang_prob_below_threshold(stage={failed.stage})",
                "prob": round(failed.target_prob, 6),
                "min_prob": failed.min_prob,
            }
            return _result(doc, None, drop=drop)
        out = doc
        removals: list[dict] = []
        sents_removed = tokens_removed = 0
        if self.sentence_check and doc.sentences:
            slow = self.stages[-1][0]
            marked = mark_foreign_sentences(doc, slow, self.target_lang, self.sentence_min_prob)
            keep = [s for s in marked.sentences or [] if s.kept]
            gone = [(i, s) for i, s in enumerate(marked.sentences or []) if not s.kept]
            if gone:
                for i, s in gone:
                    removals.append(
                        {"doc_id": doc.id, "stage": "langid", "sentence_index": i,
                         "decision": "sentence_removed", "reason": "language"}
                    )
                    sents_removed += 1
                    tokens_removed += len(s.text.split())
                if not keep:
                    drop = {"doc_id": doc.id, "stage": "langid", "decision": "dropped",
                            "reason": "no_sentences_left"}
                    return _result(doc, None, drop=drop, removals=removals,
                                   sents_removed=sents_removed, tokens_removed=tokens_removed)
                out = evolve(doc, text="\n".join(s.text for s in keep), sentences=keep)
        action = "modified" if out is not doc else "kept"
        return _result(doc, with_history(out, "langid", action), removals=removals,
                       sents_removed=sents_removed, tokens_removed=tokens_removed)


class SentsplitStage:
    def __init__(self, params: dict):
        if params.get("abbreviations_file"):
            self.abbreviations = load_abbreviations(params["abbreviations_file"])
        else:
            self.abbreviations = DEFAULT_ABBREVIATIONS

    def __call__(self, doc: Document) -> MapResult:
        sentences = split_sentences(doc.text, self.abbreviations)
        out = with_history(evolve(doc, sentences=sentences), "sentsplit", "modified")
        return _result(doc, out)


class FiltersStage:
    def __init__(self, params: dict):
        kwargs = dict(params)
        if "abbreviations_file" in kwargs:
            kwargs.pop("abbreviations_file")
        if "placeholder_patterns" in kwargs:
            kwargs["placeholder_patterns"] = tuple(kwargs["placeholder_patterns"])
        try:
            self.cfg = FilterConfig(**kwargs)
        except TypeError as exc:
            raise ConfigError(f"bad filters params: {exc}") from None

    def __call__(self, doc: Document) -> MapResult:
        verdict = apply_filters(doc, self.cfg)
        if not verdict.kept:
            drop = {
                "doc_id": doc.id,
                "stage": "filters",
                "decision": "dropped",
                "reason": ",".join(verdict.failed_rules),
            }
            return _result(doc, None, drop=drop)
        removals = []
        sents_removed = tokens_removed = 0
        kept_sentences = []
        for (i, kept, reason), sent in zip(verdict.per_sentence, doc.sentences or []):
            if kept:
                kept_sentences.append(sent)
            else:
                removals.append(
                    {"doc_id": doc.id, "stage": "filters", "sentence_index": i,
                     "decision": "sentence_removed", "reason": reason}
                )
                sents_removed += 1
                tokens_removed += len(sent.text.split())
        if not kept_sentences:
            drop = {"doc_id": doc.id, "stage": "filters", "decision": "dropped",
                    "reason": "no_sentences_left"}
            return _result(doc, None, drop=drop, removals=removals,
                           sents_removed=sents_removed, tokens_removed=tokens_removed)
        if sents_removed:
            out = evolve(doc, text="\n".join(s.text for s in kept_sentences),
                         sentences=kept_sentences)
            out = with_history(out, "filters", "modified", f"removed {sents_removed} sentences")
        else:
            out = with_history(doc, "filters", "kept")
        return _result(doc, out, removals=removals,
                       sents_removed=sents_removed, tokens_removed=tokens_removed)


_WORKER_FN = None


def _init_worker(fn) -> None:
    global _WORKER_FN
    _WORKER_FN = fn


def _invoke(doc: Document) -> MapResult:
    return _WORKER_FN(doc)  # type: ignore[misc]


_POOL_CHUNK_DOCS = 2048


def _map_docs(fn, docs: Iterable[Document], workers: int) -> Iterator[MapResult]:
    """Apply a stage callable to a document stream, order-preserving.

    With several workers the stream is processed in bounded chunks through a
    pool (the callable is shipped once per worker); a single worker runs
    in-process. Both paths yield results in input order, so worker count
    never changes the output.
    """
    if workers <= 1:
        for doc in docs:
            yield fn(doc)
        return
    with Pool(workers, initializer=_init_worker, initargs=(fn,)) as pool:
        chunk: list[Document] = []
        for doc in docs:
            chunk.append(doc)
            if len(chunk) >= _POOL_CHUNK_DOCS:
                yield from pool.map(_invoke, chunk, chunksize=max(1, len(chunk) // (workers * 4)))
                chunk = []
        if chunk:
            yield from pool.map(_invoke, chunk, chunksize=max(1, len(chunk) // (workers * 4)))


# ---------------------------------------------------------------------------
# the pipeline runner
# ---------------------------------------------------------------------------


@dataclass
class PipelineResult:
    output_path: Path
    report: StageReport
    report_txt: Path
    report_json: Path
    stage_paths: list[Path]


class _StageLog:
    """JSON-lines log of drops and sentence removals for one stage."""

    def __init__(self, path: Path):
        self.path = path
        self._fh: Optional[IO[str]] = None

    def write(self, entry: dict) -> None:
        if self._fh is None:
            self._fh = open(self.path, "w", encoding="utf-8")
        self._fh.write(json.dumps(entry, ensure_ascii=False) + "\n")

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


def run_pipeline(cfg: PipelineConfig) -> PipelineResult:
    """Execute every configured stage, returning the accounting report.

    Outputs under ``cfg.output_dir``: one ``stage_NN_<name>.jsonl`` file per
    stage boundary, a ``stage_NN_<name>.log.jsonl`` drop log per stage,
    ``cleaned.jsonl`` (the final corpus), ``report.txt`` and ``report.json``.
    Deterministic for a fixed config: rerunning produces identical bytes.
    """
    validate_config(cfg)
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stage_names = ["ingest"] + [name for name, _ in cfg.stages]
    report = StageReport(
        sources=[s.name for s in cfg.sources], stages=stage_names, corpus_name=cfg.corpus_name
    )
    stage_paths: list[Path] = []

    # stage 0: ingest
    path = out_dir / "stage_00_ingest.jsonl"
    with open(path, "wb") as fh:
        for spec in cfg.sources:
            stats = ReadStats()
            counts = report.counts(spec.name, "ingest")
            for doc in read_source(spec, stats):
                counts.add_in(doc)
                counts.add_out(doc)
                fh.write(serialize_document(doc))
            report.ingest_skipped[spec.name] = {
                "malformed": stats.malformed,
                "skipped": stats.skipped,
            }
            log.info(
                "ingest %s: %d docs (%d malformed, %d skipped)",
                spec.name, stats.records, stats.malformed, stats.skipped,
            )
    stage_paths.append(path)

    prev = path
    for idx, (name, params) in enumerate(cfg.stages, start=1):
        path = out_dir / f"stage_{idx:02d}_{name}.jsonl"
        stage_log = _StageLog(out_dir / f"stage_{idx:02d}_{name}.log.jsonl")
        try:
            if name in _MAP_STAGES:
                _run_map_stage(cfg, name, params, prev, path, report, stage_log)
            elif name == "sentence_dedup":
                _run_sentence_dedup(cfg, params, prev, path, report, stage_log)
            elif name == "onion_dedup":
                _run_onion_dedup(cfg, params, prev, path, report, stage_log, out_dir)
            elif name == "decontaminate":
                _run_decontaminate(cfg, params, prev, path, report, stage_log)
        finally:
            stage_log.close()
        log.info("stage %s done: %s", name, path.name)
        stage_paths.append(path)
        prev = path

    final = out_dir / "cleaned.jsonl"
    shutil.copyfile(prev, final)
    report_txt = out_dir / "report.txt"
    report_json = out_dir / "report.json"
    report_txt.write_text(report.format_text() + "\n", encoding="utf-8")
    report_json.write_text(report.to_json() + "\n", encoding="utf-8")
    return PipelineResult(
        output_path=final,
        report=report,
        report_txt=report_txt,
        report_json=report_json,
        stage_paths=stage_paths,
    )


def _build_map_stage(cfg: PipelineConfig, name: str, params: dict):
    if name == "transforms":
        return TransformsStage(params)
    if name == "langid":
        return LangidStage(params, cfg.target_lang)
    if name == "sentsplit":
        return SentsplitStage(params)
    if name == "filters":
        return FiltersStage(params)
    raise ConfigError(f"not a map stage: {name}")


def _run_map_stage(
    cfg: PipelineConfig,
    name: str,
    params: dict,
    src: Path,
    dst: Path,
    report: StageReport,
    stage_log: _StageLog,
) -> None:
    fn = _build_map_stage(cfg, name, params)
    docs = read_corpus(src, max_bytes=cfg.max_record_bytes)
    with open(dst, "wb") as fh:
        for res in _map_docs(fn, docs, cfg.workers):
            counts = report.counts(res.source, name)
            counts.docs_in += 1
            counts.sents_in += res.in_sents
            counts.tokens_in += res.in_tokens
            for entry in res.removals:
                stage_log.write(entry)
            counts.sents_removed += res.sents_removed
            counts.tokens_removed += res.tokens_removed
            if res.doc is None:
                counts.docs_dropped += 1
                counts.sents_dropped += res.in_sents - res.sents_removed
                counts.tokens_dropped += res.in_tokens - res.tokens_removed
                if res.drop is not None:
                    stage_log.write(res.drop)
                continue
            counts.add_out(res.doc)
            fh.write(serialize_document(res.doc))


def _run_sentence_dedup(
    cfg: PipelineConfig,
    params: dict,
    src: Path,
    dst: Path,
    report: StageReport,
    stage_log: _StageLog,
) -> None:
    name = "sentence_dedup"
    max_occ = int(params.get("max_occurrences", dedup_mod.DEFAULT_MAX_OCCURRENCES))
    exact = bool(params.get("exact", False))
    counter = dedup_mod.count_sentences(
        read_corpus(src, max_bytes=cfg.max_record_bytes), max_occurrences=max_occ, exact=exact
    )

    def _docs() -> Iterator[Document]:
        for doc in read_corpus(src, max_bytes=cfg.max_record_bytes):
            report.counts(doc.source, name).add_in(doc)
            yield doc

    modified_ids: set[str] = set()

    def on_removal(doc: Document, index: int, total: int) -> None:
        modified_ids.add(doc.id)
        counts = report.counts(doc.source, name)
        counts.sents_removed += 1
        counts.tokens_removed += len(doc.sentences[index].text.split())
        stage_log.write(
            {"doc_id": doc.id, "stage": name, "sentence_index": index,
             "decision": "sentence_removed", "count": total}
        )

    def on_drop(doc: Document, removed: int) -> None:
        report.counts(doc.source, name).add_dropped(doc)
        stage_log.write(
            {"doc_id": doc.id, "stage": name, "decision": "dropped", "count": removed,
             "reason": "no_sentences_left"}
        )

    with open(dst, "wb") as fh:
        for doc in dedup_mod.sentence_dedup(_docs(), counter, on_drop=on_drop, on_removal=on_removal):
            action = "modified" if doc.id in modified_ids else "kept"
            out = with_history(doc, name, action)
            report.counts(doc.source, name).add_out(out)
            fh.write(serialize_document(out))


def _run_onion_dedup(
    cfg: PipelineConfig,
    params: dict,
    src: Path,
    dst: Path,
    report: StageReport,
    stage_log: _StageLog,
    out_dir: Path,
) -> None:
    name = "onion_dedup"
    spill_dir = out_dir / "tmp" / "onion"
    index = dedup_mod.ShingleIndex(
        n=int(params.get("n", dedup_mod.DEFAULT_SHINGLE_N)),
        threshold=float(params.get("threshold", dedup_mod.DEFAULT_THRESHOLD)),
        exact=bool(params.get("exact", False)),
        max_in_memory=int(params.get("max_memory_hashes", 4_000_000)),
        spill_dir=spill_dir,
    )

    def _docs() -> Iterator[Document]:
        for doc in read_corpus(src, max_bytes=cfg.max_record_bytes):
            report.counts(doc.source, name).add_in(doc)
            yield doc

    def on_drop(doc: Document, ratio: float) -> None:
        report.counts(doc.source, name).add_dropped(doc)
        stage_log.write(
            {"doc_id": doc.id, "stage": name, "decision": "dropped", "ratio": round(ratio, 6)}
        )

    try:
        with open(dst, "wb") as fh:
            for doc in dedup_mod.onion_dedup(_docs(), index, on_drop=on_drop):
                out = with_history(doc, name, "kept")
                report.counts(doc.source, name).add_out(out)
                fh.write(serialize_document(out))
    finally:
        index.close()


def _run_decontaminate(
    cfg: PipelineConfig,
    params: dict,
    src: Path,
    dst: Path,
    report: StageReport,
    stage_log: _StageLog,
) -> None:
    name = "decontaminate"
    index: EvalIndex = build_eval_index(
        [tuple(e) for e in params["eval_files"]],
        normalized=not bool(params.get("exact", False)),
    )

    def _docs() -> Iterator[Document]:
        for doc in read_corpus(src, max_bytes=cfg.max_record_bytes):
            report.counts(doc.source, name).add_in(doc)
            yield doc

    modified_ids: set[str] = set()

    def on_removal(doc: Document, index_: int, matched: list[str]) -> None:
        modified_ids.add(doc.id)
        counts = report.counts(doc.source, name)
        counts.sents_removed += 1
        sentences = doc.sentences if doc.sentences is not None else split_sentences(doc.text)
        counts.tokens_removed += len(sentences[index_].text.split())
        stage_log.write(
            {"doc_id": doc.id, "stage": name, "sentence_index": index_,
             "decision": "sentence_removed", "eval_sets": matched}
        )

    def on_drop(doc: Document, removed: int) -> None:
        report.counts(doc.source, name).add_dropped(doc)
        stage_log.write(
            {"doc_id": doc.id, "stage": name, "decision": "dropped", "count": removed,
             "reason": "fully_contaminated"}
        )

    with open(dst, "wb") as fh:
        for doc in decontaminate(_docs(), index, on_removal=on_removal, on_drop=on_drop):
            action = "modified" if doc.id in modified_ids else "kept"
            out = with_history(doc, name, action)
            report.counts(doc.source, name).add_out(out)
            fh.write(serialize_document(out))


# ---------------------------------------------------------------------------
# splits
# ---------------------------------------------------------------------------


def sample_splits(
    docs: Sequence[Document], n_dev: int = 2000, n_test: int = 2000, seed: int = 0
) -> tuple[list[Document], list[Document], list[Document]]:
    """Uniformly sample dev and test documents without replacement.

    Returns (dev, test, remainder); the three lists partition the input and
    each preserves the corpus order. Deterministic under the seed.
    """
    if n_dev < 0 or n_test < 0:
        raise ValueError("split sizes must be >= 0")
    if n_dev + n_test > len(docs):
        raise NotEnoughDocuments(
            f"need {n_dev + n_test} documents for dev+test, corpus has {len(docs)}"
        )
    rng = random.Random(seed)
    chosen = rng.sample(range(len(docs)), n_dev + n_test)
    dev_idx = frozenset(chosen[:n_dev])
    test_idx = frozenset(chosen[n_dev:])
    dev: list[Document] = []
    test: list[Document] = []
    rest: list[Document] = []
    for i, doc in enumerate(docs):
        if i in dev_idx:
            dev.append(doc)
        elif i in test_idx:
            test.append(doc)
        else:
            rest.append(doc)
    return dev, test, rest
