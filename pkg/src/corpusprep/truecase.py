"""Truecasing from lemma casing evidence.

Lemmas carry the canonical casing of a word (proper nouns keep their capital
letter, everything else is lowercase).  Building a lexicon from (token,
lemma) pairs therefore tells us, per lowercase form, whether its canonical
surface starts with a capital.  Applying the lexicon rewrites tokens whose
lowercase form it knows and leaves everything else alone, which lowers
sentence-initial capitals and restores capitals on proper nouns.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Tuple

from .errors import MalformedRecord, MissingLemmas
from .ingest import Document


@dataclass
class CasingLexicon:
    """Maps a lowercase form to its canonical surface form and evidence count."""

    entries: Dict[str, Tuple[str, int]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for key, (surface, count) in self.entries.items():
            self._check(key, surface, count)

    @staticmethod
    def _check(key: str, surface: str, count: int) -> None:
        if key != surface.lower():
            raise ValueError(f"key {key!r} is not the lowercase of surface {surface!r}")
        if count < 1:
            raise ValueError(f"evidence count must be positive, got {count}")

    def lookup(self, lowercase_form: str) -> Optional[str]:
        entry = self.entries.get(lowercase_form)
        return entry[0] if entry else None

    def __len__(self) -> int:
        return len(self.entries)

    def save(self, path: str) -> None:
        """Write TSV lines `lowercase<TAB>surface<TAB>count`, sorted by key."""
        with open(path, "w", encoding="utf-8") as out:
            for key in sorted(self.entries):
                surface, count = self.entries[key]
                out.write(f"{key}\t{surface}\t{count}\n")

    @classmethod
    def load(cls, path: str) -> "CasingLexicon":
        entries: Dict[str, Tuple[str, int]] = {}
        with open(path, "r", encoding="utf-8") as handle:
            for line_no, line in enumerate(handle, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise MalformedRecord(line_no, "expected 3 tab-separated fields")
                key, surface, count_text = parts
                try:
                    count = int(count_text)
                except ValueError:
                    raise MalformedRecord(line_no, f"bad count {count_text!r}") from None
                try:
                    cls._check(key, surface, count)
                except ValueError as exc:
                    raise MalformedRecord(line_no, str(exc)) from None
                entries[key] = (surface, count)
        return cls(entries)


def _capitalized(form: str) -> str:
    return form[:1].upper() + form[1:]


def build_casing_lexicon(docs: Iterable[Document]) -> CasingLexicon:
    """Vote per lowercase form: lemma capitalized means capitalized surface.

    Conflicting evidence is resolved by majority; ties go to lowercase.  The
    stored count is the number of votes for the winning form.
    """
    votes: Dict[str, Dict[str, int]] = {}
    for doc in docs:
        if doc.lemmas is None:
            raise MissingLemmas(f"document {doc.id} has no lemma annotations")
        for token, lemma in zip(doc.tokens(), doc.lemmas):
            key = token.lower()
            if not key or not lemma:
                continue
            form = _capitalized(key) if lemma[:1].isupper() else key
            bucket = votes.setdefault(key, {})
            bucket[form] = bucket.get(form, 0) + 1

    entries: Dict[str, Tuple[str, int]] = {}
    for key, bucket in votes.items():
        best = max(bucket.items(), key=lambda item: (item[1], item[0] == key))
        entries[key] = best
    return CasingLexicon(entries)


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def _split_token(token: str) -> Tuple[str, str, str]:
    start, end = 0, len(token)
    while start < end and _is_punct(token[start]):
        start += 1
    while end > start and _is_punct(token[end - 1]):
        end -= 1
    return token[:start], token[start:end], token[end:]


def _has_internal_capital(core: str) -> bool:
    return any(ch.isupper() for ch in core[1:])


def truecase_text(text: str, lexicon: CasingLexicon) -> str:
    """Rewrite each known token to its canonical casing.

    Tokens with capitals after the first character (acronyms, camel case)
    and tokens the lexicon does not know stay as they are.  Surrounding
    punctuation is preserved.  Idempotent for a fixed lexicon.
    """
    out = []
    for token in text.split():
        lead, core, trail = _split_token(token)
        if core and not _has_internal_capital(core):
            canonical = lexicon.lookup(core.lower())
            if canonical is not None:
                core = canonical
        out.append(lead + core + trail)
    return _rejoin(text, out)


def _rejoin(original: str, tokens: list[str]) -> str:
    """Reassemble tokens using the original inter-token whitespace."""
    parts = original.split()
    if len(parts) != len(tokens):
        return " ".join(tokens)
    result = []
    cursor = 0
    for part, replacement in zip(parts, tokens):
        index = original.index(part, cursor)
        result.append(original[cursor:index])
        result.append(replacement)
        cursor = index + len(part)
    result.append(original[cursor:])
    return "".join(result)


def truecase(doc: Document, lexicon: CasingLexicon) -> Document:
    """Document-level truecase_text; id, language tag and lemmas carry over."""
    return Document(
        id=doc.id,
        text=truecase_text(doc.text, lexicon),
        lang_tag=doc.lang_tag,
        lemmas=doc.lemmas,
    )
