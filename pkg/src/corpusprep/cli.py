"""Command-line interface: every pipeline stage as a subcommand.

Exit codes: 0 on success, 1 for validation problems (bad flags, bad config,
malformed values), 2 for runtime failures (unreadable inputs, corrupt
records, stage errors).
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Dict, List, Optional, Tuple

from . import bpe, metrics
from .cleaning import (
    FilterThresholds,
    dedup,
    default_stopwords,
    heuristic_filter,
    load_stopwords,
    strip_markup,
)
from .config import validate_config
from .errors import ConfigError, PipelineError, StageError, TextTooShort
from .ingest import FORMATS, CorpusStats, Document, compute_stats, read_documents, write_documents
from .langid import default_profiles, detect_language
from .pipeline import run_pipeline
from .pretrain import (
    GenerationConfig,
    build_instances,
    read_tfrecords,
    serialize_example,
    tokenize_documents,
    write_tfrecords,
)
from .truecase import CasingLexicon, build_casing_lexicon, truecase


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad arguments; flag problems are validation (1)."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=12345, help="random seed")
    parser.add_argument("--workers", type=int, default=1, help="parallel workers")
    parser.add_argument("--format", choices=FORMATS, default="json-lines", help="input format")
    parser.add_argument("--report", default=None, help="json-lines report path")


def _print_stats(stats: CorpusStats) -> None:
    print(f"documents {stats.documents}  sentences {stats.sentences}  words {stats.words}")


def _write_report_lines(path: Optional[str], records: List[dict]) -> None:
    if path is None:
        return
    with open(path, "w", encoding="utf-8") as out:
        for record in records:
            out.write(json.dumps(record, ensure_ascii=False) + "\n")


def _cmd_stats(args) -> int:
    stats = compute_stats(read_documents(args.input, args.format))
    _print_stats(stats)
    _write_report_lines(args.report, [{"type": "stats", **stats.as_dict()}])
    return 0


def _cmd_clean(args) -> int:
    def stripped():
        for doc in read_documents(args.input, args.format):
            text = strip_markup(doc.text)
            lemmas = doc.lemmas
            if lemmas is not None and len(lemmas) != len(text.split()):
                lemmas = None
            yield Document(id=doc.id, text=text, lang_tag=doc.lang_tag, lemmas=lemmas)

    count = write_documents(stripped(), args.output, args.output_format)
    print(f"cleaned {count} documents -> {args.output}")
    return 0


def _cmd_dedup(args) -> int:
    dropped: List[dict] = []

    def on_drop(doc, reason):
        dropped.append({"id": doc.id, "stage": "dedup", "reason": reason.kind, "detail": reason.detail})

    kept = write_documents(
        dedup(read_documents(args.input, args.format), on_drop=on_drop),
        args.output,
        args.output_format,
    )
    print(f"kept {kept} documents, dropped {len(dropped)} duplicates -> {args.output}")
    _write_report_lines(args.report, dropped)
    return 0


def _thresholds_from_args(args) -> FilterThresholds:
    stopwords = (
        load_stopwords(args.stopwords) if args.stopwords else default_stopwords()
    )
    return FilterThresholds(
        min_words=args.min_words,
        max_stopword_ratio=args.max_stopword_ratio,
        max_punct_ratio=args.max_punct_ratio,
        lang_confidence_min=args.lang_confidence_min,
        stopwords=stopwords,
    )


def _cmd_filter(args) -> int:
    thresholds = _thresholds_from_args(args)
    profiles = default_profiles() if not args.no_language else None
    dropped: List[dict] = []

    def surviving():
        for doc in read_documents(args.input, args.format):
            if profiles is not None and doc.lang_tag != args.target_lang:
                try:
                    lang, prob = detect_language(doc.text, profiles)
                except TextTooShort:
                    lang, prob = None, 0.0
                if lang != args.target_lang or prob < thresholds.lang_confidence_min:
                    dropped.append(
                        {
                            "id": doc.id,
                            "stage": "langfilter",
                            "reason": "NonTargetLanguage",
                            "detail": {"lang": lang, "prob": round(prob, 6)},
                        }
                    )
                    continue
            if not args.no_heuristics:
                reason = heuristic_filter(doc, thresholds)
                if reason is not None:
                    dropped.append(
                        {
                            "id": doc.id,
                            "stage": "heuristics",
                            "reason": reason.kind,
                            "detail": reason.detail,
                        }
                    )
                    continue
            yield doc

    kept = write_documents(surviving(), args.output, args.output_format)
    print(f"kept {kept} documents, dropped {len(dropped)} -> {args.output}")
    _write_report_lines(args.report, dropped)
    return 0


def _cmd_truecase(args) -> int:
    if args.lexicon:
        lexicon = CasingLexicon.load(args.lexicon)
    else:
        lexicon = build_casing_lexicon(
            doc for doc in read_documents(args.input, args.format) if doc.lemmas is not None
        )
    if args.save_lexicon:
        lexicon.save(args.save_lexicon)

    count = write_documents(
        (truecase(doc, lexicon) for doc in read_documents(args.input, args.format)),
        args.output,
        args.output_format,
    )
    print(f"truecased {count} documents with {len(lexicon)} lexicon entries -> {args.output}")
    return 0


def _cmd_bpe_train(args) -> int:
    vocab = bpe.train_bpe(read_documents(args.input, args.format), args.vocab_size)
    vocab.save(args.vocab, args.merges)
    print(f"trained {len(vocab)} pieces, {len(vocab.merges)} merges -> {args.vocab}")
    return 0


def _cmd_bpe_encode(args) -> int:
    if not args.text and not args.input:
        print("bpe-encode: give text arguments or --input FILE", file=sys.stderr)
        return 1
    vocab = bpe.Vocab.load(args.vocab, args.merges)
    if args.text:
        lines = [" ".join(args.text)]
    else:
        with open(args.input, "r", encoding="utf-8") as handle:
            lines = [line.rstrip("\n") for line in handle]
    for line in lines:
        ids = bpe.encode(line, vocab)
        if args.pieces:
            print(" ".join(vocab.pieces[i] for i in ids))
        else:
            print(" ".join(str(i) for i in ids))
    return 0


def _generation_from_args(args) -> GenerationConfig:
    return GenerationConfig(
        max_seq_length=args.max_seq_length,
        masked_lm_prob=args.masked_lm_prob,
        random_next_prob=args.random_next_prob,
        short_seq_prob=args.short_seq_prob,
        dupe_factor=args.dupe_factor,
        shards=args.shards,
        seed=args.seed,
    )


def _cmd_make_examples(args) -> int:
    vocab = bpe.Vocab.load(args.vocab, args.merges)
    config = _generation_from_args(args)
    tokenized = tokenize_documents(read_documents(args.input, args.format), vocab)
    count = 0

    def examples():
        nonlocal count
        for inst in build_instances(tokenized, vocab, config, workers=args.workers):
            count += 1
            yield serialize_example(inst, vocab, config)

    paths = write_tfrecords(examples(), args.out_dir, config.shards)
    print(f"wrote {count} examples into {len(paths)} shards under {args.out_dir}")
    return 0


def _cmd_read_examples(args) -> int:
    shown = 0
    for example in read_tfrecords(args.shards):
        record = {
            "input_ids": list(example.input_ids),
            "input_mask": list(example.input_mask),
            "segment_ids": list(example.segment_ids),
            "masked_lm_positions": list(example.masked_lm_positions),
            "masked_lm_ids": list(example.masked_lm_ids),
            "masked_lm_weights": list(example.masked_lm_weights),
            "next_sentence_labels": example.next_sentence_labels,
        }
        print(json.dumps(record))
        shown += 1
        if args.limit and shown >= args.limit:
            break
    return 0


def _cmd_score_tags(args) -> int:
    sequences = metrics.read_conll(args.input)
    gold = [g for _, g, _ in sequences]
    pred = [p for _, _, p in sequences]
    accuracy = metrics.tagging_accuracy(gold, pred)
    print(f"accuracy: {100.0 * accuracy:.2f}%")
    _write_report_lines(args.report, [{"type": "tagging", "accuracy": round(accuracy, 6)}])
    return 0


def _cmd_score_ner(args) -> int:
    sequences = metrics.read_conll(args.input)
    gold = [g for _, g, _ in sequences]
    pred = [p for _, _, p in sequences]
    report = metrics.ner_span_f1(gold, pred)
    tokens = sum(len(g) for g in gold)
    sys.stdout.write(metrics.render_span_report(report, tokens))
    if args.report:
        metrics.write_span_report_jsonl(report, args.report)
    return 0


def _cmd_score_cls(args) -> int:
    gold: List[str] = []
    pred: List[str] = []
    with open(args.input, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            gold.append(parts[0])
            pred.append(parts[1] if len(parts) > 1 else "")
    accuracy = metrics.classification_accuracy(gold, pred)
    print(f"accuracy: {100.0 * accuracy:.2f}%")
    _write_report_lines(args.report, [{"type": "classification", "accuracy": round(accuracy, 6)}])
    return 0


_OVERRIDE_FLAGS: Dict[str, Tuple[str, str]] = {
    "input": ("input", "path"),
    "out_dir": ("output", "dir"),
    "vocab_size": ("vocab", "vocab_size"),
    "max_seq_length": ("examples", "max_seq_length"),
    "dupe_factor": ("examples", "dupe_factor"),
    "shards": ("examples", "shards"),
}


def _cmd_run(args) -> int:
    overrides: Dict[Tuple[str, str], str] = {}
    for flag, key in _OVERRIDE_FLAGS.items():
        value = getattr(args, flag)
        if value is not None:
            overrides[key] = str(value)
    if args.report is not None:
        overrides[("output", "report")] = args.report
    if args.seed_given:
        overrides[("examples", "seed")] = str(args.seed)
    config = validate_config(args.config, overrides)
    report = run_pipeline(config, workers=args.workers)
    print(report.table())
    drops = ", ".join(f"{k}: {v}" for k, v in report.drops_by_reason.items()) or "none"
    print(f"drops: {drops}")
    print(f"instances: {report.instances}")
    print(f"report: {report.artifacts['report']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="corpusprep", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, func, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        p.set_defaults(func=func)
        return p

    p = add("stats", _cmd_stats, "corpus document/sentence/word counts")
    p.add_argument("input")

    for name, func, help_text in [
        ("clean", _cmd_clean, "strip markup from every document"),
        ("dedup", _cmd_dedup, "drop exact duplicates after lowercasing"),
        ("filter", _cmd_filter, "language and quality filtering"),
        ("truecase", _cmd_truecase, "rewrite tokens to canonical casing"),
    ]:
        p = add(name, func, help_text)
        p.add_argument("input")
        p.add_argument("output")
        p.add_argument("--output-format", choices=FORMATS, default="json-lines")
        if name == "filter":
            p.add_argument("--target-lang", default="et")
            p.add_argument("--min-words", type=int, default=10)
            p.add_argument("--max-stopword-ratio", type=float, default=0.6)
            p.add_argument("--max-punct-ratio", type=float, default=0.3)
            p.add_argument("--lang-confidence-min", type=float, default=0.95)
            p.add_argument("--stopwords", default=None, help="stopword list path")
            p.add_argument("--no-language", action="store_true")
            p.add_argument("--no-heuristics", action="store_true")
        if name == "truecase":
            p.add_argument("--lexicon", default=None, help="casing lexicon TSV")
            p.add_argument("--save-lexicon", default=None)

    p = add("bpe-train", _cmd_bpe_train, "learn a subword vocabulary")
    p.add_argument("input")
    p.add_argument("--vocab-size", type=int, default=50000)
    p.add_argument("--vocab", default="vocab.txt")
    p.add_argument("--merges", default="merges.txt")

    p = add("bpe-encode", _cmd_bpe_encode, "encode text to piece ids")
    p.add_argument("text", nargs="*")
    p.add_argument("--input", default=None, help="file of lines to encode")
    p.add_argument("--vocab", required=True)
    p.add_argument("--merges", required=True)
    p.add_argument("--pieces", action="store_true", help="print pieces, not ids")

    p = add("make-examples", _cmd_make_examples, "generate MLM/NSP TFRecord shards")
    p.add_argument("input")
    p.add_argument("--vocab", required=True)
    p.add_argument("--merges", required=True)
    p.add_argument("--out-dir", default="out")
    p.add_argument("--max-seq-length", type=int, default=128)
    p.add_argument("--masked-lm-prob", type=float, default=0.15)
    p.add_argument("--random-next-prob", type=float, default=0.5)
    p.add_argument("--short-seq-prob", type=float, default=0.1)
    p.add_argument("--dupe-factor", type=int, default=10)
    p.add_argument("--shards", type=int, default=4)

    p = add("read-examples", _cmd_read_examples, "decode shard files to json-lines")
    p.add_argument("shards", nargs="+")
    p.add_argument("--limit", type=int, default=0)

    for name, func in [
        ("score-tags", _cmd_score_tags),
        ("score-ner", _cmd_score_ner),
        ("score-cls", _cmd_score_cls),
    ]:
        p = add(name, func, f"evaluate predictions ({name.split('-')[1]})")
        p.add_argument("input")

    p = add("run", _cmd_run, "full pipeline from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--input", default=None)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--vocab-size", type=int, default=None)
    p.add_argument("--max-seq-length", type=int, default=None)
    p.add_argument("--dupe-factor", type=int, default=None)
    p.add_argument("--shards", type=int, default=None)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    # run only overrides the config seed when --seed was given explicitly
    args.seed_given = any(a == "--seed" or a.startswith("--seed=") for a in argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for diagnostic in exc.diagnostics:
            print(f"config error: {diagnostic}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"invalid value: {exc}", file=sys.stderr)
        return 1
    except StageError as exc:
        print(f"stage {exc.stage} failed: {exc.cause}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2
    except PipelineError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
