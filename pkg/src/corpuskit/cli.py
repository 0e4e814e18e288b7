"""Command-line interface.

Every pipeline operation is reachable standalone. Data goes to files;
progress and accounting go to standard error. Exit codes: 0 success,
1 configuration error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import contamination as contamination_mod
from . import dedup as dedup_mod
from . import tokstats as tokstats_mod
from .benchkit import (
    aggregate_sts,
    entity_f1,
    filter_and_split_tc,
    mine_pairs_jaccard,
    qa_dataset_stats,
    qa_score,
    stratified_subsample,
    sts_score,
    token_f1,
    DEFAULT_ARTICLES,
)
from .benchkit import formats as fmt
from .docmodel import Document, read_corpus, with_history, write_corpus
from .errors import ConfigError, CorpusKitError
from .pipeline import load_config, run_pipeline, sample_splits
from .sentfilters import split_sentences

log = logging.getLogger("corpuskit")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2


def _eval_file_arg(value: str) -> tuple:
    """Parse NAME=PATH[:FORMAT] into an eval-file tuple."""
    name, sep, rest = value.partition("=")
    if not sep or not name or not rest:
        raise argparse.ArgumentTypeError(f"expected NAME=PATH[:FORMAT], got {value!r}")
    path, sep, fmt_name = rest.rpartition(":")
    if sep and fmt_name in contamination_mod.EVAL_FORMATS:
        return (name, path, fmt_name)
    return (name, rest)


def _write_or_stdout(text: str, output: str | None) -> None:
    if output and output != "-":
        Path(output).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _ensure_sentences(doc: Document) -> Document:
    if doc.sentences is None:
        from .docmodel import evolve

        return evolve(doc, sentences=split_sentences(doc.text))
    return doc


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------


def _cmd_clean(args) -> int:
    cfg = load_config(args.config)
    if args.workers is not None:
        cfg.workers = args.workers
    if args.seed is not None:
        cfg.seed = args.seed
    if args.output_dir is not None:
        cfg.output_dir = args.output_dir
    result = run_pipeline(cfg)
    print(result.report.format_text(), file=sys.stderr)
    print(result.output_path)
    return EXIT_OK


def _cmd_split(args) -> int:
    docs = list(read_corpus(args.input))
    dev, test, rest = sample_splits(docs, n_dev=args.n_dev, n_test=args.n_test, seed=args.seed)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_corpus(out / "dev.jsonl", dev)
    write_corpus(out / "test.jsonl", test)
    write_corpus(out / "train.jsonl", rest)
    log.info("split %d documents into %d dev / %d test / %d train",
             len(docs), len(dev), len(test), len(rest))
    print(out)
    return EXIT_OK


def _cmd_dedup(args) -> int:
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    log_path = out / "dedup.log.jsonl"
    result_path = out / "deduped.jsonl"
    events = open(log_path, "w", encoding="utf-8")

    def docs():
        for doc in read_corpus(args.input):
            yield _ensure_sentences(doc)

    stream = docs
    if not args.skip_sentence:
        counter = dedup_mod.count_sentences(stream(), max_occurrences=args.max_occurrences,
                                            exact=args.exact)

        def on_removal(doc, i, total):
            events.write(json.dumps({"doc_id": doc.id, "stage": "sentence_dedup",
                                     "sentence_index": i, "count": total,
                                     "decision": "sentence_removed"}) + "\n")

        def on_sent_drop(doc, removed):
            events.write(json.dumps({"doc_id": doc.id, "stage": "sentence_dedup",
                                     "decision": "dropped", "count": removed}) + "\n")

        first_pass = list(
            dedup_mod.sentence_dedup(stream(), counter, on_drop=on_sent_drop, on_removal=on_removal)
        )
    else:
        first_pass = list(stream())
    kept = first_pass
    if not args.skip_onion:
        index = dedup_mod.ShingleIndex(n=args.n, threshold=args.threshold, exact=args.exact)

        def on_drop(doc, ratio):
            events.write(json.dumps({"doc_id": doc.id, "stage": "onion_dedup",
                                     "decision": "dropped", "ratio": round(ratio, 6)}) + "\n")

        try:
            kept = list(dedup_mod.onion_dedup(iter(first_pass), index, on_drop=on_drop))
        finally:
            index.close()
    events.close()
    n = write_corpus(result_path, (with_history(d, "dedup", "kept") for d in kept))
    log.info("dedup kept %d documents", n)
    print(result_path)
    return EXIT_OK


def _build_eval_index(args):
    return contamination_mod.build_eval_index(args.eval, normalized=not args.exact)


def _cmd_contamination_report(args) -> int:
    index = _build_eval_index(args)
    report = contamination_mod.contamination_report(read_corpus(args.input), index)
    _write_or_stdout(report.to_json(), args.output)
    print(report.summary(), file=sys.stderr)
    return EXIT_OK


def _cmd_decontaminate(args) -> int:
    index = _build_eval_index(args)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    removal_path = out / "decontaminate.log.jsonl"
    result_path = out / "decontaminated.jsonl"
    with open(removal_path, "w", encoding="utf-8") as events:
        def on_removal(doc, i, matched):
            events.write(json.dumps({"doc_id": doc.id, "sentence_index": i,
                                     "eval_sets": matched,
                                     "decision": "sentence_removed"}) + "\n")

        def on_drop(doc, removed):
            events.write(json.dumps({"doc_id": doc.id, "decision": "dropped",
                                     "count": removed}) + "\n")

        n = write_corpus(
            result_path,
            contamination_mod.decontaminate(read_corpus(args.input), index,
                                            on_removal=on_removal, on_drop=on_drop),
        )
    report = contamination_mod.contamination_report(read_corpus(result_path), index)
    print(report.summary(), file=sys.stderr)
    log.info("decontaminated corpus: %d documents kept", n)
    print(result_path)
    return EXIT_OK


def _tokenizer_arg(value: str):
    """Parse NAME=bpe:VOCAB:MERGES or NAME=wordpiece:VOCAB."""
    name, sep, rest = value.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected NAME=TYPE:PATH[...], got {value!r}")
    parts = rest.split(":")
    if parts[0] == "bpe" and len(parts) == 3:
        return (name, "bpe", parts[1], parts[2])
    if parts[0] == "wordpiece" and len(parts) == 2:
        return (name, "wordpiece", parts[1])
    raise argparse.ArgumentTypeError(
        f"expected bpe:VOCAB:MERGES or wordpiece:VOCAB after {name}=, got {rest!r}"
    )


def _load_tokenizer(entry):
    if entry[1] == "bpe":
        return tokstats_mod.load_bpe_tokenizer(entry[2], entry[3])
    return tokstats_mod.load_wordpiece_vocab(entry[2])


def _cmd_tokstats(args) -> int:
    sentences = [line for line in Path(args.sentences).read_text(encoding="utf-8").splitlines()
                 if line.strip()]
    rows = []
    for entry in args.tokenizer:
        tok = _load_tokenizer(entry)
        rows.append((entry[0], tokstats_mod.subwords_per_sentence(tok, sentences)))
    _write_or_stdout(tokstats_mod.format_subwords_table(rows), args.output)
    return EXIT_OK


def _cmd_vocab_overlap(args) -> int:
    vocabs = []
    for value in args.vocab:
        name, sep, path = value.partition("=")
        if not sep:
            raise ConfigError(f"expected NAME=PATH, got {value!r}")
        vocabs.append((name, tokstats_mod.load_vocab_tokens(path)))
    overlap = tokstats_mod.vocab_overlap(vocabs, mode=args.mode)
    if args.json:
        _write_or_stdout(tokstats_mod.overlap_to_json(overlap), args.output)
    else:
        _write_or_stdout(tokstats_mod.format_overlap_table(overlap), args.output)
    return EXIT_OK


def _cmd_sts_aggregate(args) -> int:
    records = fmt.read_annotations(args.annotations)
    results = aggregate_sts(records)
    good = [r for r in results if not r.degenerate]
    with open(args.output, "w", encoding="utf-8") as fh:
        for r in good:
            fh.write(f"{r.pair_id}\t{r.final_score:g}\t{','.join(r.discarded)}\n")
    if args.degenerate_output:
        with open(args.degenerate_output, "w", encoding="utf-8") as fh:
            for r in results:
                if r.degenerate:
                    fh.write(f"{r.pair_id}\n")
    log.info("aggregated %d pairs (%d degenerate)", len(results), len(results) - len(good))
    print(args.output)
    return EXIT_OK


def _cmd_sts_mine(args) -> int:
    sentences = [line.strip() for line in Path(args.sentences).read_text(encoding="utf-8").splitlines()
                 if line.strip()]
    pairs = mine_pairs_jaccard(sentences, args.min_sim, args.max_sim, args.k)
    with open(args.output, "w", encoding="utf-8") as fh:
        for i, (a, b, sim) in enumerate(pairs):
            fh.write(f"pair-{i:05d}\t{a}\t{b}\t{sim:.4f}\n")
    log.info("mined %d candidate pairs", len(pairs))
    print(args.output)
    return EXIT_OK


def _cmd_tc_split(args) -> int:
    examples = fmt.read_tc_examples(args.input)
    ratios = tuple(float(x) for x in args.ratios.split(","))
    if len(ratios) != 3:
        raise ConfigError(f"ratios must be three comma-separated numbers, got {args.ratios!r}")
    train, dev, test = filter_and_split_tc(
        examples, min_per_label=args.min_per_label, ratios=ratios, seed=args.seed
    )
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    fmt.write_tc_examples(out / "train.tsv", train)
    fmt.write_tc_examples(out / "dev.tsv", dev)
    fmt.write_tc_examples(out / "test.tsv", test)
    log.info("split %d examples into %d/%d/%d", len(examples), len(train), len(dev), len(test))
    print(out)
    return EXIT_OK


def _cmd_subsample(args) -> int:
    examples = fmt.read_tc_examples(args.input)
    sample = stratified_subsample(examples, args.size, seed=args.seed)
    fmt.write_tc_examples(args.output, sample)
    log.info("subsampled %d of %d examples", len(sample), len(examples))
    print(args.output)
    return EXIT_OK


def _cmd_score(args) -> int:
    if args.task in ("nerc", "pos"):
        gold = fmt.read_conll(args.gold)
        pred = fmt.read_conll(args.pred)
        gold_tags = [tags for _, tags in gold]
        pred_tags = [tags for _, tags in pred]
        if args.task == "nerc":
            metrics = {"f1": entity_f1(pred_tags, gold_tags)}
        else:
            metrics = {"f1": token_f1(pred_tags, gold_tags)}
    elif args.task == "tc":
        gold = {ex.id: ex.label for ex in fmt.read_tc_examples(args.gold)}
        pred_rows = [line.split("\t") for line in Path(args.pred).read_text(encoding="utf-8").splitlines() if line.strip()]
        pred = {cols[0]: cols[1] for cols in pred_rows}
        missing = set(gold) - set(pred)
        if missing:
            raise CorpusKitError(f"missing predictions for {len(missing)} examples")
        correct = sum(1 for ex_id, label in gold.items() if pred.get(ex_id) == label)
        metrics = {"accuracy": 100.0 * correct / len(gold) if gold else 0.0}
    elif args.task == "sts":
        gold_pairs = fmt.read_sts_pairs(args.gold)
        pred_rows = [line.split("\t") for line in Path(args.pred).read_text(encoding="utf-8").splitlines() if line.strip()]
        pred = {cols[0]: float(cols[1]) for cols in pred_rows}
        gold_v = []
        pred_v = []
        for pair in gold_pairs:
            if pair.pair_id not in pred:
                raise CorpusKitError(f"missing prediction for pair {pair.pair_id!r}")
            gold_v.append(pair.score)
            pred_v.append(pred[pair.pair_id])
        metrics = {"pearson_spearman_avg": 100.0 * sts_score(pred_v, gold_v)}
    elif args.task == "qa":
        dataset = fmt.read_qa_json(args.gold)
        predictions = fmt.read_predictions_json(args.pred)
        score = qa_score(predictions, dataset.examples,
                         discount_articles=args.discount_articles,
                         articles=tuple(args.articles.split(",")) if args.articles else DEFAULT_ARTICLES)
        metrics = {"f1": score.f1, "exact_match": score.exact_match}
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigError(f"unknown task {args.task!r}")
    _write_or_stdout(json.dumps({k: round(v, 2) for k, v in metrics.items()}), args.output)
    return EXIT_OK


def _cmd_qa_stats(args) -> int:
    dataset = fmt.read_qa_json(args.input)
    stats = qa_dataset_stats(dataset.examples, articles=dataset.n_articles)
    _write_or_stdout(stats.format_table(), args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="corpuskit",
        description="Corpus curation: cleaning pipeline, dedup, decontamination, benchmark tools.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="chatty progress on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("clean", help="run the full cleaning pipeline from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--output-dir", default=None)
    p.set_defaults(fn=_cmd_clean)

    p = sub.add_parser("split", help="sample held-out validation and test documents")
    p.add_argument("--input", required=True)
    p.add_argument("--n-dev", type=int, default=2000)
    p.add_argument("--n-test", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output-dir", required=True)
    p.set_defaults(fn=_cmd_split)

    p = sub.add_parser("dedup", help="document- and sentence-level deduplication")
    p.add_argument("--input", required=True)
    p.add_argument("--output-dir", required=True)
    p.add_argument("--n", type=int, default=dedup_mod.DEFAULT_SHINGLE_N)
    p.add_argument("--threshold", type=float, default=dedup_mod.DEFAULT_THRESHOLD)
    p.add_argument("--max-occurrences", type=int, default=dedup_mod.DEFAULT_MAX_OCCURRENCES)
    p.add_argument("--exact", action="store_true", help="exact-string shingles (no hashing)")
    p.add_argument("--skip-sentence", action="store_true")
    p.add_argument("--skip-onion", action="store_true")
    p.set_defaults(fn=_cmd_dedup)

    p = sub.add_parser("contamination-report", help="measure eval-set overlap")
    p.add_argument("--input", required=True)
    p.add_argument("--eval", action="append", required=True, type=_eval_file_arg,
                   metavar="NAME=PATH[:FORMAT]")
    p.add_argument("--exact", action="store_true", help="match raw sentences, not normalized")
    p.add_argument("--output", default="-")
    p.set_defaults(fn=_cmd_contamination_report)

    p = sub.add_parser("decontaminate", help="remove eval-set sentences from a corpus")
    p.add_argument("--input", required=True)
    p.add_argument("--eval", action="append", required=True, type=_eval_file_arg,
                   metavar="NAME=PATH[:FORMAT]")
    p.add_argument("--exact", action="store_true")
    p.add_argument("--output-dir", required=True)
    p.set_defaults(fn=_cmd_decontaminate)

    p = sub.add_parser("tokstats", help="subwords-per-sentence table for tokenizers")
    p.add_argument("--tokenizer", action="append", required=True, type=_tokenizer_arg,
                   metavar="NAME=bpe:VOCAB:MERGES or NAME=wordpiece:VOCAB")
    p.add_argument("--sentences", required=True, help="file with one sentence per line")
    p.add_argument("--output", default="-")
    p.set_defaults(fn=_cmd_tokstats)

    p = sub.add_parser("vocab-overlap", help="vocabulary sizes and pairwise intersections")
    p.add_argument("--vocab", action="append", required=True, metavar="NAME=PATH")
    p.add_argument("--mode", choices=("raw", "marker_stripped"), default="raw")
    p.add_argument("--json", action="store_true")
    p.add_argument("--output", default="-")
    p.set_defaults(fn=_cmd_vocab_overlap)

    p = sub.add_parser("sts-aggregate", help="aggregate annotator scores into final pair scores")
    p.add_argument("--annotations", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--degenerate-output", default=None)
    p.set_defaults(fn=_cmd_sts_aggregate)

    p = sub.add_parser("sts-mine", help="mine candidate sentence pairs by Jaccard similarity")
    p.add_argument("--sentences", required=True)
    p.add_argument("--min-sim", type=float, default=0.3)
    p.add_argument("--max-sim", type=float, default=0.9)
    p.add_argument("--k", type=int, default=1000)
    p.add_argument("--output", required=True)
    p.set_defaults(fn=_cmd_sts_mine)

    p = sub.add_parser("tc-split", help="filter rare labels and split stratified")
    p.add_argument("--input", required=True)
    p.add_argument("--min-per-label", type=int, default=2000)
    p.add_argument("--ratios", default="0.8,0.1,0.1")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output-dir", required=True)
    p.set_defaults(fn=_cmd_tc_split)

    p = sub.add_parser("subsample", help="stratified subsample of labeled examples")
    p.add_argument("--input", required=True)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.set_defaults(fn=_cmd_subsample)

    p = sub.add_parser("score", help="score predictions for a benchmark task")
    p.add_argument("--task", choices=("nerc", "pos", "tc", "sts", "qa"), required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--discount-articles", action="store_true",
                   help="QA: ignore a leading article in answers")
    p.add_argument("--articles", default=None, help="QA: comma-separated article list")
    p.add_argument("--output", default="-")
    p.set_defaults(fn=_cmd_score)

    p = sub.add_parser("qa-stats", help="token statistics of a QA dataset")
    p.add_argument("--input", required=True)
    p.add_argument("--output", default="-")
    p.set_defaults(fn=_cmd_qa_stats)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CorpusKitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
