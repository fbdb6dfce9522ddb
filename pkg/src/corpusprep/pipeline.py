"""End-to-end corpus pipeline: clean, vocabulary, pretraining shards.

Stages run in a fixed order (strip, langfilter, dedup, heuristics,
truecase); disabled stages are skipped, never reordered.  Documents stream
through a single driver loop so memory stays flat in corpus size; the
truecase stage uses a temporary file for its two passes (collect casing
evidence, then rewrite).  Failures carry the stage name via StageError.

Reports are fully deterministic: no timestamps, fixed key order, so a rerun
with the same inputs and seed is byte-identical, report included.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Tuple

from .bpe import Vocab, train_bpe
from .cleaning import (
    DUPLICATE,
    NON_TARGET_LANGUAGE,
    DropReason,
    FilterThresholds,
    dedup_key,
    default_stopwords,
    heuristic_filter,
    load_stopwords,
    strip_markup,
)
from .config import PipelineConfig, StageToggles
from .errors import IoError, MissingLemmas, PipelineError, StageError, TextTooShort
from .ingest import CorpusStats, Document, read_documents, write_documents
from .langid import LanguageProfiles, default_profiles, detect_language
from .pretrain import (
    GenerationConfig,
    build_instances,
    serialize_example,
    tokenize_documents,
    write_tfrecords,
)
from .truecase import CasingLexicon, build_casing_lexicon, truecase


@dataclass(frozen=True)
class StageReport:
    stage: str
    input: CorpusStats
    output: CorpusStats
    dropped: int


@dataclass
class PipelineReport:
    stages: List[StageReport]
    before: CorpusStats
    after: CorpusStats
    drops_by_reason: Dict[str, int]
    artifacts: Dict[str, object]
    instances: int

    def table(self) -> str:
        """Before/after corpus statistics as an aligned text table."""
        rows = [
            ("documents", self.before.documents, self.after.documents),
            ("sentences", self.before.sentences, self.after.sentences),
            ("words", self.before.words, self.after.words),
        ]
        lines = [f"{'metric':<12}{'before':>14}{'after':>14}"]
        for name, before, after in rows:
            lines.append(f"{name:<12}{before:>14}{after:>14}")
        return "\n".join(lines)

    def records(self) -> List[dict]:
        """json-lines payload, one record per line, deterministic order."""
        out: List[dict] = []
        for stage in self.stages:
            out.append(
                {
                    "type": "stage",
                    "stage": stage.stage,
                    "in": stage.input.as_dict(),
                    "out": stage.output.as_dict(),
                    "dropped": stage.dropped,
                }
            )
        out.append(
            {
                "type": "summary",
                "before": self.before.as_dict(),
                "after": self.after.as_dict(),
                "drops": dict(sorted(self.drops_by_reason.items())),
                "instances": self.instances,
            }
        )
        out.append({"type": "artifacts", **self.artifacts})
        return out


def _wrap(stage: str, exc: Exception) -> StageError:
    return StageError(stage, exc)


def _write_docs(stream: Iterator[Document], path: str) -> int:
    """Write the stream as json-lines; write failures attribute to output."""
    try:
        return write_documents(stream, path, "json-lines")
    except StageError:
        raise
    except IoError as exc:
        raise _wrap("output", exc) from exc


class _DropLog:
    def __init__(self, path: str):
        self.path = path
        self.by_reason: Dict[str, int] = {}
        self.by_stage: Dict[str, int] = {}
        self._handle = open(path, "w", encoding="utf-8")

    def record(self, doc: Document, stage: str, reason: DropReason) -> None:
        self.by_reason[reason.kind] = self.by_reason.get(reason.kind, 0) + 1
        self.by_stage[stage] = self.by_stage.get(stage, 0) + 1
        line = json.dumps(
            {"id": doc.id, "stage": stage, "reason": reason.kind, "detail": reason.detail},
            ensure_ascii=False,
        )
        self._handle.write(line + "\n")

    def close(self) -> None:
        self._handle.close()


def _clean_stream(
    docs: Iterator[Document],
    stages: StageToggles,
    thresholds: FilterThresholds,
    target_lang: str,
    profiles: LanguageProfiles,
    drops: _DropLog,
    tallies: Dict[str, CorpusStats],
) -> Iterator[Document]:
    """Drive ingest through heuristics one document at a time."""
    seen_digests: set = set()
    reader = iter(docs)
    while True:
        try:
            doc = next(reader)
        except StopIteration:
            return
        except PipelineError as exc:
            raise _wrap("ingest", exc) from exc
        tallies["ingest"].add_document(doc)

        if stages.strip:
            try:
                text = strip_markup(doc.text)
                # tag removal can change tokenization; lemmas stay only while aligned
                lemmas = doc.lemmas
                if lemmas is not None and len(lemmas) != len(text.split()):
                    lemmas = None
                doc = Document(id=doc.id, text=text, lang_tag=doc.lang_tag, lemmas=lemmas)
            except (PipelineError, ValueError) as exc:
                raise _wrap("strip", exc) from exc
            tallies["strip"].add_document(doc)

        if stages.langfilter:
            if doc.lang_tag != target_lang:
                try:
                    lang, prob = detect_language(doc.text, profiles)
                except TextTooShort:
                    lang, prob = None, 0.0
                if lang != target_lang or prob < thresholds.lang_confidence_min:
                    drops.record(
                        doc,
                        "langfilter",
                        DropReason(NON_TARGET_LANGUAGE, {"lang": lang, "prob": round(prob, 6)}),
                    )
                    continue
            tallies["langfilter"].add_document(doc)

        if stages.dedup:
            digest = dedup_key(doc.text)
            if digest in seen_digests:
                drops.record(doc, "dedup", DropReason(DUPLICATE, digest.hex()))
                continue
            seen_digests.add(digest)
            tallies["dedup"].add_document(doc)

        if stages.heuristics:
            reason = heuristic_filter(doc, thresholds)
            if reason is not None:
                drops.record(doc, "heuristics", reason)
                continue
            tallies["heuristics"].add_document(doc)

        yield doc


def _truecase_pass(
    temp_path: str,
    out_path: str,
    lexicon_path: Optional[str],
    tally: CorpusStats,
) -> Tuple[CasingLexicon, int]:
    """Build or load the lexicon, then rewrite the staged corpus."""
    if lexicon_path is not None:
        lexicon = CasingLexicon.load(lexicon_path)
    else:
        total = 0

        def annotated() -> Iterator[Document]:
            nonlocal total
            for doc in read_documents(temp_path, "json-lines"):
                total += 1
                if doc.lemmas is not None:
                    yield doc

        lexicon = build_casing_lexicon(annotated())
        if total and not len(lexicon):
            raise MissingLemmas(
                "no documents carry lemma annotations and no lexicon file was given"
            )

    def rewritten() -> Iterator[Document]:
        for doc in read_documents(temp_path, "json-lines"):
            cased = truecase(doc, lexicon)
            tally.add_document(cased)
            yield cased

    count = write_documents(rewritten(), out_path, "json-lines")
    return lexicon, count


def run_pipeline(config: PipelineConfig, workers: int = 1) -> PipelineReport:
    """Execute enabled stages, write artifacts, and return the report."""
    os.makedirs(config.out_dir, exist_ok=True)
    cleaned_path = os.path.join(config.out_dir, "cleaned.jsonl")
    drops_path = os.path.join(config.out_dir, "drops.jsonl")
    report_path = config.report_path or os.path.join(config.out_dir, "report.jsonl")

    stage_names = ["ingest"] + config.stages.enabled()
    tallies: Dict[str, CorpusStats] = {name: CorpusStats() for name in stage_names}

    if config.stopwords_path is not None:
        try:
            stopwords = load_stopwords(config.stopwords_path)
        except OSError as exc:
            raise _wrap("heuristics", exc) from exc
    else:
        stopwords = default_stopwords()
    thresholds = FilterThresholds(
        min_words=config.thresholds.min_words,
        max_stopword_ratio=config.thresholds.max_stopword_ratio,
        max_punct_ratio=config.thresholds.max_punct_ratio,
        lang_confidence_min=config.thresholds.lang_confidence_min,
        stopwords=stopwords,
    )
    profiles = default_profiles() if config.stages.langfilter else LanguageProfiles()

    drops = _DropLog(drops_path)
    try:
        reader = read_documents(config.input_path, config.input_format)
        stream = _clean_stream(
            reader, config.stages, thresholds, config.target_lang, profiles, drops, tallies
        )

        if config.stages.truecase:
            temp_path = os.path.join(config.out_dir, "cleaned.pre-truecase.tmp")
            try:
                _write_docs(stream, temp_path)
                tallies["truecase"] = CorpusStats()
                try:
                    _truecase_pass(
                        temp_path,
                        cleaned_path,
                        config.truecase_lexicon_path,
                        tallies["truecase"],
                    )
                except StageError:
                    raise
                except (PipelineError, OSError) as exc:
                    raise _wrap("truecase", exc) from exc
            finally:
                if os.path.exists(temp_path):
                    os.remove(temp_path)
        else:
            _write_docs(stream, cleaned_path)
    finally:
        drops.close()

    # stage-by-stage stats: each enabled stage's output is the next input
    stage_reports: List[StageReport] = []
    previous = tallies["ingest"]
    dropped_at = dict(drops.by_stage)
    for name in config.stages.enabled():
        out_stats = tallies.get(name, previous)
        stage_reports.append(
            StageReport(
                stage=name,
                input=previous,
                output=out_stats,
                dropped=dropped_at.get(name, 0),
            )
        )
        previous = out_stats

    before = tallies["ingest"]
    after = previous

    try:
        vocab = train_bpe(read_documents(cleaned_path, "json-lines"), config.vocab_size)
    except PipelineError as exc:
        raise _wrap("bpe", exc) from exc
    vocab_path = os.path.join(config.out_dir, "vocab.txt")
    merges_path = os.path.join(config.out_dir, "merges.txt")
    vocab.save(vocab_path, merges_path)

    instance_count = 0
    try:
        tokenized = tokenize_documents(read_documents(cleaned_path, "json-lines"), vocab)

        def examples():
            nonlocal instance_count
            for inst in build_instances(tokenized, vocab, config.generation, workers=workers):
                instance_count += 1
                yield serialize_example(inst, vocab, config.generation)

        shard_files = write_tfrecords(examples(), config.out_dir, config.generation.shards)
    except PipelineError as exc:
        raise _wrap("examples", exc) from exc

    report = PipelineReport(
        stages=stage_reports,
        before=before,
        after=after,
        drops_by_reason=dict(sorted(drops.by_reason.items())),
        artifacts={
            "cleaned": cleaned_path,
            "vocab": vocab_path,
            "merges": merges_path,
            "shards": shard_files,
            "drops": drops_path,
            "report": report_path,
        },
        instances=instance_count,
    )
    with open(report_path, "w", encoding="utf-8") as out:
        for record in report.records():
            out.write(json.dumps(record, ensure_ascii=False) + "\n")
    return report
