"""Document cleaning stages: markup stripping, dedup, heuristic filters.

Stages operate per document and stream-friendly: strip_markup and
heuristic_filter are pure functions, dedup is a generator holding only the
set of seen digests.  Language filtering lives in langid; truecasing in
truecase.
"""

from __future__ import annotations

import hashlib
import re
import unicodedata
from dataclasses import dataclass
from importlib import resources
from typing import Callable, FrozenSet, Iterable, Iterator, Optional

from .ingest import Document

# Drop reason kinds, as written to drop reports.
NON_TARGET_LANGUAGE = "NonTargetLanguage"
DUPLICATE = "Duplicate"
TOO_FEW_WORDS = "TooFewWords"
TOO_MANY_STOPWORDS = "TooManyStopwords"
TOO_MUCH_PUNCTUATION = "TooMuchPunctuation"

DROP_KINDS = frozenset(
    {NON_TARGET_LANGUAGE, DUPLICATE, TOO_FEW_WORDS, TOO_MANY_STOPWORDS, TOO_MUCH_PUNCTUATION}
)


@dataclass(frozen=True)
class DropReason:
    """Why a document was removed, with the measured value that triggered it."""

    kind: str
    detail: object

    def __post_init__(self) -> None:
        if self.kind not in DROP_KINDS:
            raise ValueError(f"unknown drop kind: {self.kind!r}")


@dataclass(frozen=True)
class FilterThresholds:
    min_words: int = 10
    max_stopword_ratio: float = 0.6
    max_punct_ratio: float = 0.3
    lang_confidence_min: float = 0.95
    stopwords: FrozenSet[str] = frozenset()

    def __post_init__(self) -> None:
        if self.min_words < 1:
            raise ValueError("min_words must be >= 1")
        for name in ("max_stopword_ratio", "max_punct_ratio", "lang_confidence_min"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")


# --- markup stripping ---------------------------------------------------

# A junction is one or more complete tags plus any whitespace between and
# around them.  It collapses to a single space when it contained whitespace
# (tags separated words) and to nothing otherwise (tags hugged the text).
_JUNCTION = re.compile(r"\s*(?:<[^>]*>\s*)+")
_ENTITY = re.compile(r"&(amp|lt|gt|quot|apos);|&#(\d+);|&#[xX]([0-9a-fA-F]+);")
_NAMED_ENTITIES = {"amp": "&", "lt": "<", "gt": ">", "quot": '"', "apos": "'"}


def _junction_repl(match: re.Match) -> str:
    return " " if any(ch.isspace() for ch in match.group(0)) else ""


def _entity_repl(match: re.Match) -> str:
    name, dec, hexa = match.groups()
    if name:
        return _NAMED_ENTITIES[name]
    code = int(dec) if dec else int(hexa, 16)
    if code > 0x10FFFF or 0xD800 <= code <= 0xDFFF:
        return match.group(0)  # not a valid codepoint, keep verbatim
    return chr(code)


def strip_markup(text: str) -> str:
    """Remove tags and decode character entities until a fixed point.

    Decoding can reveal new tags (&lt;b&gt; becomes <b>), so one pass is not
    enough to guarantee idempotence; every rewrite strictly shortens the
    text, so the loop terminates.  A lone "<" without a closing ">" never
    matches and stays verbatim.
    """
    while True:
        stripped = _JUNCTION.sub(_junction_repl, text)
        stripped = _ENTITY.sub(_entity_repl, stripped)
        if stripped == text:
            return text.strip()
        text = stripped


# --- deduplication -------------------------------------------------------


def dedup_key(text: str) -> bytes:
    """Stable 128-bit digest of lowercased, whitespace-normalized text."""
    normalized = " ".join(text.lower().split())
    return hashlib.blake2b(normalized.encode("utf-8"), digest_size=16).digest()


def dedup(
    docs: Iterable[Document],
    on_drop: Optional[Callable[[Document, DropReason], None]] = None,
) -> Iterator[Document]:
    """Yield the first document for each dedup_key, preserving input order.

    Later occurrences are reported to on_drop with a Duplicate reason whose
    detail is the shared digest (hex).
    """
    seen: set[bytes] = set()
    for doc in docs:
        digest = dedup_key(doc.text)
        if digest in seen:
            if on_drop is not None:
                on_drop(doc, DropReason(DUPLICATE, digest.hex()))
            continue
        seen.add(digest)
        yield doc


# --- heuristic quality filters -------------------------------------------


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def _strip_punct(token: str) -> str:
    start, end = 0, len(token)
    while start < end and _is_punct(token[start]):
        start += 1
    while end > start and _is_punct(token[end - 1]):
        end -= 1
    return token[start:end]


def heuristic_filter(doc: Document, thresholds: FilterThresholds) -> Optional[DropReason]:
    """Return the first failing quality check, or None to keep the document.

    Checks run in a fixed order: word count, stopword ratio, punctuation
    ratio.  The verdict depends only on the text and thresholds.
    """
    words = doc.tokens()
    if len(words) < thresholds.min_words:
        return DropReason(TOO_FEW_WORDS, len(words))

    stopword_count = sum(
        1 for word in words if _strip_punct(word.lower()) in thresholds.stopwords
    )
    stopword_ratio = stopword_count / len(words)
    if stopword_ratio > thresholds.max_stopword_ratio:
        return DropReason(TOO_MANY_STOPWORDS, stopword_ratio)

    non_space = [ch for ch in doc.text if not ch.isspace()]
    if non_space:
        punct_ratio = sum(1 for ch in non_space if _is_punct(ch)) / len(non_space)
        if punct_ratio > thresholds.max_punct_ratio:
            return DropReason(TOO_MUCH_PUNCTUATION, punct_ratio)

    return None


def load_stopwords(path: str) -> FrozenSet[str]:
    """Read a stopword list: one lowercase form per line, '#' comments."""
    forms = set()
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line and not line.startswith("#"):
                forms.add(line.lower())
    return frozenset(forms)


def default_stopwords() -> FrozenSet[str]:
    """The packaged Estonian stopword list."""
    text = resources.files("corpusprep.data").joinpath("stopwords_et.txt").read_text("utf-8")
    forms = set()
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            forms.add(line.lower())
    return frozenset(forms)
