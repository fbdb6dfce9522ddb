"""Read and write corpora in the supported container formats.

Three formats are supported:

* ``vert-xml`` -- Sketch-Engine-flavoured vertical files: one document per
  ``<doc ...>`` ... ``</doc>`` element, ``id`` and ``lang`` attributes
  recognized, one sentence per line.  The exact grammar of the national web
  corpora this mirrors is not published anywhere, so this reader is a
  line-based reconstruction: ``<doc`` must open a line and ``</doc>`` must
  stand alone on its closing line.  Markup *inside* a document is kept
  verbatim for the cleaning stage.
* ``blankline-text`` -- plain UTF-8 blocks separated by one or more blank
  lines; ids are synthesized as ``doc-<ordinal>``.
* ``json-lines`` -- one object per line with a required ``text`` key and
  optional ``id``, ``lang`` and ``lemmas`` keys.  The only format that can
  carry lemma annotations.

Readers are generators and never hold more than one document in memory.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Tuple

from .errors import IoError, MalformedRecord, UnreadableFile

FORMATS = ("vert-xml", "blankline-text", "json-lines")

_DOC_OPEN = re.compile(r"<doc(\s[^>]*)?>\s*$")
_ATTR = re.compile(r"""([\w:-]+)\s*=\s*"([^"]*)"|([\w:-]+)\s*=\s*'([^']*)'""")

# only the characters that are structural in our vertical format
_VERT_ESCAPES = [("&", "&amp;"), ("<", "&lt;"), (">", "&gt;"), ('"', "&quot;")]


@dataclass(frozen=True)
class Document:
    """One corpus unit.

    ``text`` holds newline-separated sentences when the source is
    pre-segmented.  ``lemmas``, when present, aligns one-to-one with the
    whitespace tokens of ``text``.
    """

    id: str
    text: str
    lang_tag: Optional[str] = None
    lemmas: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("document id must be non-empty")
        if self.lemmas is not None:
            object.__setattr__(self, "lemmas", tuple(self.lemmas))
            n_tokens = len(self.text.split())
            if len(self.lemmas) != n_tokens:
                raise ValueError(
                    f"document {self.id!r}: {len(self.lemmas)} lemmas for {n_tokens} tokens"
                )

    def tokens(self) -> list[str]:
        return self.text.split()


@dataclass
class CorpusStats:
    """Document/sentence/word counts in the shape of a cleanup report row."""

    documents: int = 0
    sentences: int = 0
    words: int = 0

    def add_document(self, doc: Document) -> None:
        self.documents += 1
        self.sentences += sum(1 for line in doc.text.split("\n") if line.strip())
        self.words += len(doc.text.split())

    def __add__(self, other: "CorpusStats") -> "CorpusStats":
        return CorpusStats(
            self.documents + other.documents,
            self.sentences + other.sentences,
            self.words + other.words,
        )

    def __le__(self, other: "CorpusStats") -> bool:
        return (
            self.documents <= other.documents
            and self.sentences <= other.sentences
            and self.words <= other.words
        )

    def as_dict(self) -> dict:
        return {"documents": self.documents, "sentences": self.sentences, "words": self.words}


def compute_stats(docs: Iterable[Document]) -> CorpusStats:
    """Count documents, non-empty lines and whitespace tokens of a stream."""
    stats = CorpusStats()
    for doc in docs:
        stats.add_document(doc)
    return stats


def read_documents(path: str, format: str) -> Iterator[Document]:
    """Yield documents from ``path`` in file order.

    Raises UnreadableFile if the file cannot be opened and
    MalformedRecord(line_no) for records that violate the format grammar.
    """
    _check_format(format)
    try:
        handle = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise UnreadableFile(f"cannot open {path}: {exc}") from exc
    with handle:
        if format == "vert-xml":
            yield from _read_vert(handle)
        elif format == "blankline-text":
            yield from _read_blankline(handle)
        else:
            yield from _read_jsonl(handle)


def write_documents(docs: Iterable[Document], path: str, format: str) -> int:
    """Write a document stream; returns the number of documents written.

    ``read_documents(write_documents(S))`` reproduces every field the format
    can represent: all of them for json-lines, everything but lemmas for
    vert-xml, only the text (with synthesized ids) for blankline-text.
    """
    _check_format(format)
    written = 0
    try:
        with open(path, "w", encoding="utf-8") as out:
            if format == "vert-xml":
                for doc in docs:
                    attrs = f' id="{_vert_escape(doc.id)}"'
                    if doc.lang_tag is not None:
                        attrs += f' lang="{_vert_escape(doc.lang_tag)}"'
                    out.write(f"<doc{attrs}>\n")
                    if doc.text:
                        out.write(_vert_escape(doc.text) + "\n")
                    out.write("</doc>\n")
                    written += 1
            elif format == "blankline-text":
                for doc in docs:
                    if written:
                        out.write("\n")
                    out.write(doc.text + "\n")
                    written += 1
            else:
                for doc in docs:
                    record = {"id": doc.id, "text": doc.text}
                    if doc.lang_tag is not None:
                        record["lang"] = doc.lang_tag
                    if doc.lemmas is not None:
                        record["lemmas"] = list(doc.lemmas)
                    out.write(json.dumps(record, ensure_ascii=False) + "\n")
                    written += 1
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    return written


def _check_format(format: str) -> None:
    if format not in FORMATS:
        raise ValueError(f"unknown corpus format {format!r}; expected one of {FORMATS}")


def _vert_escape(text: str) -> str:
    for char, entity in _VERT_ESCAPES:
        text = text.replace(char, entity)
    return text


def _vert_unescape(text: str) -> str:
    for char, entity in reversed(_VERT_ESCAPES):
        text = text.replace(entity, char)
    return text


def _read_vert(handle) -> Iterator[Document]:
    ordinal = 0
    open_line = 0
    attrs: dict[str, str] = {}
    lines: list[str] | None = None
    for line_no, raw in enumerate(handle, 1):
        line = raw.rstrip("\n")
        if lines is None:
            if not line.strip():
                continue
            match = _DOC_OPEN.match(line.strip())
            if not match:
                raise MalformedRecord(line_no, f"expected <doc ...>, got {line.strip()!r}")
            attrs = {
                (m.group(1) or m.group(3)): _vert_unescape(m.group(2) if m.group(2) is not None else m.group(4))
                for m in _ATTR.finditer(match.group(1) or "")
            }
            open_line = line_no
            lines = []
        elif line.strip() == "</doc>":
            doc_id = attrs.get("id") or f"doc-{ordinal}"
            yield Document(
                id=doc_id,
                text=_vert_unescape("\n".join(lines)),
                lang_tag=attrs.get("lang"),
            )
            ordinal += 1
            lines = None
        else:
            lines.append(line)
    if lines is not None:
        raise MalformedRecord(open_line, "unclosed <doc> element")


def _read_blankline(handle) -> Iterator[Document]:
    ordinal = 0
    block: list[str] = []
    for raw in handle:
        line = raw.rstrip("\n")
        if line.strip():
            block.append(line)
        elif block:
            yield Document(id=f"doc-{ordinal}", text="\n".join(block))
            ordinal += 1
            block = []
    if block:
        yield Document(id=f"doc-{ordinal}", text="\n".join(block))


def _read_jsonl(handle) -> Iterator[Document]:
    ordinal = 0
    for line_no, raw in enumerate(handle, 1):
        line = raw.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(line_no, f"invalid JSON: {exc}") from exc
        if not isinstance(record, dict):
            raise MalformedRecord(line_no, "expected a JSON object")
        if "text" not in record:
            raise MalformedRecord(line_no, 'missing required "text" key')
        if not isinstance(record["text"], str):
            raise MalformedRecord(line_no, '"text" must be a string')
        lang = record.get("lang")
        if lang is not None and not isinstance(lang, str):
            raise MalformedRecord(line_no, '"lang" must be a string')
        lemmas = record.get("lemmas")
        if lemmas is not None and (
            not isinstance(lemmas, list) or any(not isinstance(x, str) for x in lemmas)
        ):
            raise MalformedRecord(line_no, '"lemmas" must be an array of strings')
        try:
            yield Document(
                id=str(record.get("id") or f"doc-{ordinal}"),
                text=record["text"],
                lang_tag=lang,
                lemmas=tuple(lemmas) if lemmas is not None else None,
            )
        except ValueError as exc:
            raise MalformedRecord(line_no, str(exc)) from exc
        ordinal += 1
