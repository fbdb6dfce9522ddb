"""MLM+NSP pretraining instances and sharded TFRecord output.

Instance generation follows the standard BERT data tool: sentences
accumulate into chunks up to a target length, each chunk splits into segment
A and segment B, B is either the document's continuation or sentences from a
random other document, the pair is truncated to fit and 15% of the
non-special tokens are masked 80/10/10.

Two deliberate departures from that tool, both needed for reproducibility
guarantees:

- The next-sentence decision is a pure coin flip with random_next_prob.  A
  chunk that drew "actual next" but has only one segment produces no
  instance instead of being forced to the random branch, so probability 0
  or 1 yields exactly 0% or 100% random-next labels.
- Randomness is derived per (document, duplication index), not from one
  shared generator, so any worker count produces byte-identical output in
  a fixed (dupe, document) order.
"""

from __future__ import annotations

import hashlib
import math
import multiprocessing
import os
import random
from dataclasses import dataclass, replace
from typing import Iterable, Iterator, List, Sequence, Tuple

from .bpe import PAD_ID, SPECIALS, Vocab, encode
from .errors import (
    CorpusTooSmall,
    IoError,
    NoMaskableTokens,
    PieceNotInVocab,
    UnknownFeature,
)
from .ingest import Document
from .tfrecord import encode_example, frame_record, parse_example, read_framed

CLS, SEP, MASK = "[CLS]", "[SEP]", "[MASK]"

FEATURE_ORDER = (
    "input_ids",
    "input_mask",
    "segment_ids",
    "masked_lm_positions",
    "masked_lm_ids",
    "masked_lm_weights",
    "next_sentence_labels",
)


@dataclass(frozen=True)
class GenerationConfig:
    max_seq_length: int = 128
    masked_lm_prob: float = 0.15
    random_next_prob: float = 0.5
    short_seq_prob: float = 0.1
    dupe_factor: int = 10
    shards: int = 4
    seed: int = 12345

    def __post_init__(self) -> None:
        if self.max_seq_length < 5:
            raise ValueError("max_seq_length must be at least 5 ([CLS] a [SEP] b [SEP])")
        for name in ("masked_lm_prob", "random_next_prob", "short_seq_prob"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")
        if self.dupe_factor < 1:
            raise ValueError("dupe_factor must be >= 1")
        if self.shards < 1:
            raise ValueError("shards must be >= 1")


def masked_budget(max_seq_length: int, masked_lm_prob: float) -> int:
    """Masked-slot capacity per sequence: ceil(prob * length).

    The inner round guards against float noise like 0.15 * 20 being a hair
    above 3.0, which would otherwise inflate the ceiling.
    """
    if max_seq_length < 1:
        raise ValueError("max_seq_length must be >= 1")
    return math.ceil(round(masked_lm_prob * max_seq_length, 9))


def round_half_up(x: float) -> int:
    """round(0.5) == 1, unlike banker's rounding; float noise guarded."""
    return math.floor(round(x + 0.5, 9))


@dataclass(frozen=True)
class TokenizedDoc:
    """A document as a sequence of non-empty sentence piece lists."""

    id: str
    sentences: Tuple[Tuple[str, ...], ...]

    def __post_init__(self) -> None:
        if any(len(s) == 0 for s in self.sentences):
            raise ValueError("sentences must be non-empty")


def tokenize_documents(docs: Iterable[Document], vocab: Vocab) -> List[TokenizedDoc]:
    """Encode each non-empty line as one sentence; drop empty documents."""
    out = []
    for doc in docs:
        sentences = []
        for line in doc.text.splitlines():
            ids = encode(line, vocab)
            if ids:
                sentences.append(tuple(vocab.pieces[i] for i in ids))
        if sentences:
            out.append(TokenizedDoc(id=doc.id, sentences=tuple(sentences)))
    return out


@dataclass(frozen=True)
class PretrainingInstance:
    tokens: Tuple[str, ...]
    segment_ids: Tuple[int, ...]
    masked_positions: Tuple[int, ...]
    masked_labels: Tuple[str, ...]
    is_random_next: bool

    def __post_init__(self) -> None:
        if not self.tokens or self.tokens[0] != CLS:
            raise ValueError("tokens must start with [CLS]")
        if self.tokens.count(SEP) != 2:
            raise ValueError("tokens must contain exactly two [SEP]")
        if len(self.segment_ids) != len(self.tokens):
            raise ValueError("segment_ids must align with tokens")
        if any(s not in (0, 1) for s in self.segment_ids):
            raise ValueError("segment_ids must be 0 or 1")
        if any(a > b for a, b in zip(self.segment_ids, self.segment_ids[1:])):
            raise ValueError("segment_ids must be non-decreasing")
        if len(self.masked_positions) != len(self.masked_labels):
            raise ValueError("masked_positions and masked_labels must align")
        if any(a >= b for a, b in zip(self.masked_positions, self.masked_positions[1:])):
            raise ValueError("masked_positions must be strictly increasing")
        for pos in self.masked_positions:
            if not 0 <= pos < len(self.tokens):
                raise ValueError(f"masked position {pos} out of range")
            if self.tokens[pos] in (CLS, SEP):
                raise ValueError("masked positions must not index [CLS] or [SEP]")


def _doc_rng(seed: int, doc_id: str, dupe: int) -> random.Random:
    digest = hashlib.blake2b(
        f"{doc_id}\x00{dupe}".encode("utf-8"), digest_size=8
    ).digest()
    return random.Random(seed ^ int.from_bytes(digest, "little"))


def _pick_foreign_doc(rng: random.Random, doc_count: int, current: int) -> int:
    while True:
        candidate = rng.randint(0, doc_count - 1)
        if candidate != current:
            return candidate


def _truncate_pair(
    tokens_a: List[str], tokens_b: List[str], max_num_tokens: int, rng: random.Random
) -> None:
    """Trim the longer side, dropping from front or back with equal odds."""
    while len(tokens_a) + len(tokens_b) > max_num_tokens:
        trunc = tokens_a if len(tokens_a) > len(tokens_b) else tokens_b
        if rng.random() < 0.5:
            del trunc[0]
        else:
            trunc.pop()


def _instances_for_doc(
    docs: Sequence[TokenizedDoc],
    doc_index: int,
    vocab: Vocab,
    config: GenerationConfig,
    rng: random.Random,
) -> List[PretrainingInstance]:
    document = docs[doc_index].sentences
    max_num_tokens = config.max_seq_length - 3
    target_seq_length = max_num_tokens
    if rng.random() < config.short_seq_prob:
        target_seq_length = rng.randint(2, max_num_tokens)

    instances: List[PretrainingInstance] = []
    current_chunk: List[Tuple[str, ...]] = []
    current_length = 0
    i = 0
    while i < len(document):
        segment = document[i]
        current_chunk.append(segment)
        current_length += len(segment)
        if i == len(document) - 1 or current_length >= target_seq_length:
            if current_chunk:
                a_end = 1
                if len(current_chunk) >= 2:
                    a_end = rng.randint(1, len(current_chunk) - 1)
                tokens_a: List[str] = []
                for j in range(a_end):
                    tokens_a.extend(current_chunk[j])

                is_random_next = rng.random() < config.random_next_prob
                tokens_b: List[str] = []
                if is_random_next:
                    target_b_length = target_seq_length - len(tokens_a)
                    foreign = docs[_pick_foreign_doc(rng, len(docs), doc_index)]
                    start = rng.randint(0, len(foreign.sentences) - 1)
                    for j in range(start, len(foreign.sentences)):
                        tokens_b.extend(foreign.sentences[j])
                        if len(tokens_b) >= target_b_length:
                            break
                    # segments beyond a_end were not consumed; rewind them
                    i -= len(current_chunk) - a_end
                elif len(current_chunk) >= 2:
                    for j in range(a_end, len(current_chunk)):
                        tokens_b.extend(current_chunk[j])
                if tokens_b:
                    _truncate_pair(tokens_a, tokens_b, max_num_tokens, rng)
                    tokens = (CLS, *tokens_a, SEP, *tokens_b, SEP)
                    segment_ids = (0,) * (len(tokens_a) + 2) + (1,) * (len(tokens_b) + 1)
                    instance = PretrainingInstance(
                        tokens=tokens,
                        segment_ids=segment_ids,
                        masked_positions=(),
                        masked_labels=(),
                        is_random_next=is_random_next,
                    )
                    instances.append(apply_masking(instance, vocab, config, rng))
            current_chunk = []
            current_length = 0
        i += 1
    return instances


def apply_masking(
    instance: PretrainingInstance,
    vocab: Vocab,
    config: GenerationConfig,
    rng: random.Random,
) -> PretrainingInstance:
    """Mask non-special positions: 80% [MASK], 10% random piece, 10% kept."""
    candidates = [
        idx for idx, token in enumerate(instance.tokens) if token not in SPECIALS
    ]
    if not candidates:
        raise NoMaskableTokens("instance has no non-special tokens")
    budget = masked_budget(config.max_seq_length, config.masked_lm_prob)
    num = min(budget, max(1, round_half_up(config.masked_lm_prob * len(candidates))))
    positions = sorted(rng.sample(candidates, num))

    tokens = list(instance.tokens)
    labels = []
    for pos in positions:
        labels.append(tokens[pos])
        roll = rng.random()
        if roll < 0.8:
            tokens[pos] = MASK
        elif roll < 0.9:
            tokens[pos] = vocab.pieces[rng.randint(len(SPECIALS), len(vocab.pieces) - 1)]
        # else: token stays, label still recorded
    return replace(
        instance,
        tokens=tuple(tokens),
        masked_positions=tuple(positions),
        masked_labels=tuple(labels),
    )


# --- parallel generation ---------------------------------------------------

_WORKER_STATE: dict = {}


def _init_worker(docs, vocab, config):
    _WORKER_STATE["docs"] = docs
    _WORKER_STATE["vocab"] = vocab
    _WORKER_STATE["config"] = config


def _run_task(task: Tuple[int, int]) -> List[PretrainingInstance]:
    dupe, doc_index = task
    docs = _WORKER_STATE["docs"]
    config = _WORKER_STATE["config"]
    rng = _doc_rng(config.seed, docs[doc_index].id, dupe)
    return _instances_for_doc(docs, doc_index, _WORKER_STATE["vocab"], config, rng)


def build_instances(
    docs: Sequence[TokenizedDoc],
    vocab: Vocab,
    config: GenerationConfig,
    workers: int = 1,
) -> Iterator[PretrainingInstance]:
    """Yield instances for every (dupe, document) pair in that fixed order.

    Randomness comes only from config.seed and the pair identity, so the
    stream is identical for any worker count.
    """
    docs = [doc for doc in docs if doc.sentences]
    if len(docs) < 2:
        raise CorpusTooSmall("need at least 2 documents for random-next sampling")
    tasks = [(dupe, idx) for dupe in range(config.dupe_factor) for idx in range(len(docs))]

    if workers <= 1:
        _init_worker(docs, vocab, config)
        for task in tasks:
            yield from _run_task(task)
        return

    context = multiprocessing.get_context("fork")
    with context.Pool(
        workers, initializer=_init_worker, initargs=(docs, vocab, config)
    ) as pool:
        for batch in pool.imap(_run_task, tasks, chunksize=8):
            yield from batch


# --- serialization ----------------------------------------------------------


@dataclass(frozen=True)
class SerializedExample:
    input_ids: Tuple[int, ...]
    input_mask: Tuple[int, ...]
    segment_ids: Tuple[int, ...]
    masked_lm_positions: Tuple[int, ...]
    masked_lm_ids: Tuple[int, ...]
    masked_lm_weights: Tuple[float, ...]
    next_sentence_labels: int


def serialize_example(
    instance: PretrainingInstance, vocab: Vocab, config: GenerationConfig
) -> SerializedExample:
    """Map pieces to ids and pad every list to its fixed length."""
    length = config.max_seq_length
    budget = masked_budget(length, config.masked_lm_prob)
    if len(instance.tokens) > length:
        raise ValueError(f"instance of {len(instance.tokens)} tokens exceeds {length}")

    def piece_id(piece: str) -> int:
        idx = vocab.piece_to_id.get(piece)
        if idx is None:
            raise PieceNotInVocab(f"piece {piece!r} missing from vocabulary")
        return idx

    ids = [piece_id(t) for t in instance.tokens]
    pad = length - len(ids)
    mask_pad = budget - len(instance.masked_positions)
    return SerializedExample(
        input_ids=tuple(ids) + (PAD_ID,) * pad,
        input_mask=(1,) * len(ids) + (0,) * pad,
        segment_ids=tuple(instance.segment_ids) + (0,) * pad,
        masked_lm_positions=tuple(instance.masked_positions) + (0,) * mask_pad,
        masked_lm_ids=tuple(piece_id(t) for t in instance.masked_labels)
        + (0,) * mask_pad,
        masked_lm_weights=(1.0,) * len(instance.masked_positions) + (0.0,) * mask_pad,
        next_sentence_labels=1 if instance.is_random_next else 0,
    )


def example_payload(example: SerializedExample) -> bytes:
    features = {
        "input_ids": ("int64", example.input_ids),
        "input_mask": ("int64", example.input_mask),
        "segment_ids": ("int64", example.segment_ids),
        "masked_lm_positions": ("int64", example.masked_lm_positions),
        "masked_lm_ids": ("int64", example.masked_lm_ids),
        "masked_lm_weights": ("float", example.masked_lm_weights),
        "next_sentence_labels": ("int64", [example.next_sentence_labels]),
    }
    return encode_example(features, FEATURE_ORDER)


def shard_paths(out_dir: str, shards: int) -> List[str]:
    return [
        os.path.join(out_dir, f"pretrain-{i}-of-{shards}.tfrecord") for i in range(shards)
    ]


def write_tfrecords(
    examples: Iterable[SerializedExample], out_dir: str, shards: int
) -> List[str]:
    """Distribute examples round-robin by arrival index over shard files."""
    paths = shard_paths(out_dir, shards)
    try:
        os.makedirs(out_dir, exist_ok=True)
        handles = [open(path, "wb") for path in paths]
    except OSError as exc:
        raise IoError(str(exc)) from exc
    try:
        for index, example in enumerate(examples):
            handles[index % shards].write(frame_record(example_payload(example)))
    except OSError as exc:
        raise IoError(str(exc)) from exc
    finally:
        for handle in handles:
            handle.close()
    return paths


def read_tfrecords(paths: Iterable[str]) -> Iterator[SerializedExample]:
    """Decode shard files back to examples, validating CRCs and feature names.

    Records interleave round-robin across the given paths, one record per
    file per round, which inverts write_tfrecords' assignment: reading the
    shard list back yields the original arrival order.
    """
    streams = [read_framed(path) for path in paths]
    while streams:
        exhausted = []
        for stream in streams:
            payload = next(stream, None)
            if payload is None:
                exhausted.append(stream)
                continue
            yield _decode_payload(payload)
        for stream in exhausted:
            streams.remove(stream)


def _decode_payload(payload: bytes) -> SerializedExample:
    features = parse_example(payload)
    unknown = set(features) - set(FEATURE_ORDER)
    if unknown:
        raise UnknownFeature(f"unexpected feature(s): {sorted(unknown)}")
    missing = set(FEATURE_ORDER) - set(features)
    if missing:
        raise UnknownFeature(f"missing feature(s): {sorted(missing)}")

    def ints(name: str) -> Tuple[int, ...]:
        kind, values = features[name]
        if kind != "int64":
            raise UnknownFeature(f"feature {name} must be int64")
        return tuple(int(v) for v in values)

    kind, weights = features["masked_lm_weights"]
    if kind != "float":
        raise UnknownFeature("feature masked_lm_weights must be float")
    label_list = ints("next_sentence_labels")
    return SerializedExample(
        input_ids=ints("input_ids"),
        input_mask=ints("input_mask"),
        segment_ids=ints("segment_ids"),
        masked_lm_positions=ints("masked_lm_positions"),
        masked_lm_ids=ints("masked_lm_ids"),
        masked_lm_weights=tuple(float(w) for w in weights),
        next_sentence_labels=label_list[0] if label_list else 0,
    )
