"""Byte-pair-encoding subword vocabulary: training, encode, decode.

Character-level BPE in the sentencepiece style: text is NFKC-normalized and
whitespace-split, every word gets a separate "▁" boundary symbol before its
characters, and training repeatedly merges the most frequent adjacent symbol
pair.  Five special pieces occupy ids 0-4 and never take part in merges.
Unknown characters encode to [UNK]; there is no byte fallback.
"""

from __future__ import annotations

import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence, Tuple

from .errors import EmptyCorpus, IdOutOfRange, MalformedRecord, UnreadableFile, VocabSizeTooSmall
from .ingest import Document

SPECIALS = ("[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]")
PAD_ID, UNK_ID, CLS_ID, SEP_ID, MASK_ID = range(5)
DEFAULT_MARKER = "▁"  # ▁


@dataclass(frozen=True)
class Vocab:
    """An ordered piece inventory plus the merge list that produced it."""

    pieces: Tuple[str, ...]
    merges: Tuple[Tuple[str, str], ...]
    marker: str = DEFAULT_MARKER
    piece_to_id: Dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.pieces[: len(SPECIALS)] != SPECIALS:
            raise ValueError("pieces must start with the five special tokens")
        mapping = {}
        for idx, piece in enumerate(self.pieces):
            if piece in mapping:
                raise ValueError(f"duplicate piece {piece!r}")
            mapping[piece] = idx
        for left, right in self.merges:
            if left in SPECIALS or right in SPECIALS:
                raise ValueError("special tokens cannot appear in merges")
        object.__setattr__(self, "piece_to_id", mapping)

    def __len__(self) -> int:
        return len(self.pieces)

    def save(self, vocab_path: str, merges_path: str) -> None:
        """vocab file: one piece per line, line number = id; merges: "left right"."""
        with open(vocab_path, "w", encoding="utf-8") as out:
            for piece in self.pieces:
                out.write(piece + "\n")
        with open(merges_path, "w", encoding="utf-8") as out:
            for left, right in self.merges:
                out.write(f"{left} {right}\n")

    @classmethod
    def load(cls, vocab_path: str, merges_path: str, marker: str = DEFAULT_MARKER) -> "Vocab":
        try:
            with open(vocab_path, "r", encoding="utf-8") as handle:
                pieces = tuple(line.rstrip("\n") for line in handle if line.rstrip("\n"))
            merges: List[Tuple[str, str]] = []
            with open(merges_path, "r", encoding="utf-8") as handle:
                for line_no, line in enumerate(handle, start=1):
                    line = line.rstrip("\n")
                    if not line:
                        continue
                    parts = line.split(" ")
                    if len(parts) != 2:
                        raise MalformedRecord(line_no, 'merge line must be "left right"')
                    merges.append((parts[0], parts[1]))
        except OSError as exc:
            raise UnreadableFile(str(exc)) from exc
        return cls(pieces=pieces, merges=tuple(merges), marker=marker)


def _word_counts(docs: Iterable[Document]) -> Counter:
    counts: Counter = Counter()
    for doc in docs:
        counts.update(unicodedata.normalize("NFKC", doc.text).split())
    return counts


def train_bpe(
    docs: Iterable[Document],
    vocab_size: int,
    word_boundary_marker: str = DEFAULT_MARKER,
) -> Vocab:
    """Learn a BPE vocabulary of exactly vocab_size pieces where possible.

    Ties on pair frequency break by lexicographic order of the concatenated
    piece, then of the pair itself, so training is deterministic for a given
    corpus.  Stops early only when the corpus has no pairs left to merge.
    """
    words = _word_counts(docs)
    if not words:
        raise EmptyCorpus("no words in training stream")

    alphabet = {word_boundary_marker}
    for word in words:
        alphabet.update(word)
    floor = len(SPECIALS) + len(alphabet)
    if vocab_size <= floor:
        raise VocabSizeTooSmall(
            f"vocab_size must exceed specials+alphabet = {floor}, got {vocab_size}"
        )

    pieces: List[str] = list(SPECIALS) + sorted(alphabet)
    known = set(pieces)
    merges: List[Tuple[str, str]] = []
    symbolized: Dict[Tuple[str, ...], int] = {
        (word_boundary_marker, *word): freq for word, freq in words.items()
    }

    while len(pieces) < vocab_size:
        pair_counts: Counter = Counter()
        for symbols, freq in symbolized.items():
            for left, right in zip(symbols, symbols[1:]):
                pair_counts[(left, right)] += freq
        candidates = {
            pair: count for pair, count in pair_counts.items() if pair[0] + pair[1] not in SPECIALS
        }
        if not candidates:
            break
        best = min(candidates, key=lambda p: (-candidates[p], p[0] + p[1], p))
        merges.append(best)
        merged = best[0] + best[1]
        if merged not in known:
            known.add(merged)
            pieces.append(merged)
        symbolized = {
            _apply_merge(symbols, best): freq for symbols, freq in symbolized.items()
        }

    return Vocab(pieces=tuple(pieces), merges=tuple(merges), marker=word_boundary_marker)


def _apply_merge(symbols: Sequence[str], pair: Tuple[str, str]) -> Tuple[str, ...]:
    """Replace non-overlapping occurrences of pair, scanning left to right."""
    out: List[str] = []
    i = 0
    while i < len(symbols):
        if i + 1 < len(symbols) and (symbols[i], symbols[i + 1]) == pair:
            out.append(symbols[i] + symbols[i + 1])
            i += 2
        else:
            out.append(symbols[i])
            i += 1
    return tuple(out)


def encode(text: str, vocab: Vocab) -> List[int]:
    """NFKC-normalize, split on whitespace, replay merges per word by rank."""
    ranks = {pair: rank for rank, pair in enumerate(vocab.merges)}
    ids: List[int] = []
    for word in unicodedata.normalize("NFKC", text).split():
        symbols: Tuple[str, ...] = (vocab.marker, *word)
        while len(symbols) > 1:
            best_rank = None
            best_pair = None
            for pair in zip(symbols, symbols[1:]):
                rank = ranks.get(pair)
                if rank is not None and (best_rank is None or rank < best_rank):
                    best_rank, best_pair = rank, pair
            if best_pair is None:
                break
            symbols = _apply_merge(symbols, best_pair)
        ids.extend(vocab.piece_to_id.get(symbol, UNK_ID) for symbol in symbols)
    return ids


def decode(ids: Sequence[int], vocab: Vocab) -> str:
    """Concatenate pieces, turn boundary markers into spaces, trim."""
    out = []
    for idx in ids:
        if not 0 <= idx < len(vocab.pieces):
            raise IdOutOfRange(f"id {idx} outside vocabulary of {len(vocab.pieces)} pieces")
        out.append(vocab.pieces[idx])
    return "".join(out).replace(vocab.marker, " ").strip()
