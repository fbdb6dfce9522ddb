"""Measure stage throughput on a synthetic corpus.

Times the streaming clean+dedup pass, vocabulary training, and pretraining
example generation (at 1 and N workers), reporting documents or instances
per second.  Numbers are meant for relative comparison between machines and
code revisions, not as absolute benchmarks.

    python3 scripts/benchmark_throughput.py --n-docs 20000 --workers 4
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
import tempfile
import time

from corpusprep.bpe import train_bpe
from corpusprep.cleaning import dedup, strip_markup
from corpusprep.ingest import Document, read_documents
from corpusprep.pretrain import GenerationConfig, build_instances, tokenize_documents

_WORDS = (
    "maja mets järv meri linn tänav kool laps õpetaja raamat sõna keel "
    "päike vihm lumi tuul kevad suvi sügis talv hommik õhtu päev öö aeg"
).split()


def synthesize(path: str, n_docs: int, seed: int) -> None:
    rng = random.Random(seed)
    with open(path, "w", encoding="utf-8") as out:
        for i in range(n_docs):
            sentences = []
            for _ in range(rng.randint(2, 5)):
                words = [rng.choice(_WORDS) for _ in range(rng.randint(8, 16))]
                sentences.append(" ".join(words) + ".")
            body = "\n".join(sentences)
            out.write(
                json.dumps({"id": f"bench-{i:06d}", "text": f"<p>{body}</p>"}, ensure_ascii=False)
                + "\n"
            )


def timed(label: str, unit: str, count: int, start: float) -> None:
    elapsed = time.perf_counter() - start
    rate = count / elapsed if elapsed else float("inf")
    print(f"{label:<28} {count:>9} {unit} in {elapsed:7.2f}s  ({rate:,.0f} {unit}/s)")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n-docs", type=int, default=20000)
    parser.add_argument("--vocab-size", type=int, default=500)
    parser.add_argument("--workers", type=int, default=os.cpu_count() or 2)
    parser.add_argument("--dupe-factor", type=int, default=2)
    parser.add_argument("--seed", type=int, default=12345)
    args = parser.parse_args(argv)

    with tempfile.TemporaryDirectory(prefix="bench-") as workdir:
        corpus = os.path.join(workdir, "corpus.jsonl")
        synthesize(corpus, args.n_docs, args.seed)
        print(f"corpus: {args.n_docs} documents, {os.path.getsize(corpus) / 1e6:.1f} MB\n")

        start = time.perf_counter()

        def stripped():
            for doc in read_documents(corpus, "json-lines"):
                yield Document(id=doc.id, text=strip_markup(doc.text))

        survivors = sum(1 for _ in dedup(stripped()))
        timed("clean + dedup (stream)", "docs", survivors, start)

        start = time.perf_counter()
        vocab = train_bpe(read_documents(corpus, "json-lines"), args.vocab_size)
        timed("bpe training", "docs", args.n_docs, start)

        tokenized = list(
            tokenize_documents(
                (doc for i, doc in enumerate(read_documents(corpus, "json-lines")) if i < 2000),
                vocab,
            )
        )
        config = GenerationConfig(dupe_factor=args.dupe_factor, seed=args.seed)
        for workers in sorted({1, args.workers}):
            start = time.perf_counter()
            count = sum(1 for _ in build_instances(tokenized, vocab, config, workers=workers))
            timed(f"examples (workers={workers})", "instances", count, start)
    return 0


if __name__ == "__main__":
    sys.exit(main())
