"""Corpus records and their line-delimited JSON file format.

One document per line: ``{"doc_id": ..., "text": ..., "mentions": [...]}``
with mention objects ``{"start", "end", "surface", "group", "gold_id"?,
"gold_composite"?}``. Mentions are ordered by start offset and each surface
must equal the corresponding text slice.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

# Tokens before a "." that do not end a sentence.
_ABBREVIATIONS = {
    "dr", "mr", "mrs", "ms", "prof", "st", "vs", "etc", "approx",
    "e.g", "i.e", "cf", "al", "fig", "figs", "eq", "no", "vol", "resp",
}
_TERMINATORS = ".!?;"


class CorpusFormatError(ValueError):
    pass


@dataclass(frozen=True)
class MentionRecord:
    start: int
    end: int
    surface: str
    group: str
    gold_id: str | None = None
    gold_composite: bool = False


@dataclass
class DocumentRecord:
    doc_id: str
    text: str
    mentions: list[MentionRecord] = field(default_factory=list)

    def validate(self) -> None:
        prev_start = -1
        for i, m in enumerate(self.mentions):
            if not (0 <= m.start < m.end <= len(self.text)):
                raise CorpusFormatError(
                    f"{self.doc_id}: mention {i} span [{m.start},{m.end}) out of bounds"
                )
            if self.text[m.start : m.end] != m.surface:
                raise CorpusFormatError(
                    f"{self.doc_id}: mention {i} surface {m.surface!r} does not "
                    f"match text slice {self.text[m.start:m.end]!r}"
                )
            if m.start < prev_start:
                raise CorpusFormatError(
                    f"{self.doc_id}: mentions not sorted by start offset"
                )
            prev_start = m.start


def read_corpus(path: str | Path) -> list[DocumentRecord]:
    docs: list[DocumentRecord] = []
    seen_ids: set[str] = set()
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            doc = _doc_from_obj(obj, f"{path}:{lineno}")
            if doc.doc_id in seen_ids:
                raise CorpusFormatError(f"{path}:{lineno}: duplicate doc_id {doc.doc_id!r}")
            seen_ids.add(doc.doc_id)
            doc.validate()
            docs.append(doc)
    return docs


def _doc_from_obj(obj: dict, where: str) -> DocumentRecord:
    try:
        mentions = [
            MentionRecord(
                start=m["start"],
                end=m["end"],
                surface=m["surface"],
                group=m["group"],
                gold_id=m.get("gold_id"),
                gold_composite=bool(m.get("gold_composite", False)),
            )
            for m in obj["mentions"]
        ]
        return DocumentRecord(doc_id=obj["doc_id"], text=obj["text"], mentions=mentions)
    except (KeyError, TypeError) as exc:
        raise CorpusFormatError(f"{where}: missing field {exc}") from exc


def write_corpus(docs: Iterable[DocumentRecord], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps(_doc_to_obj(doc), ensure_ascii=False) + "\n")


def _doc_to_obj(doc: DocumentRecord) -> dict:
    mentions = []
    for m in doc.mentions:
        obj = {"start": m.start, "end": m.end, "surface": m.surface, "group": m.group}
        if m.gold_id is not None:
            obj["gold_id"] = m.gold_id
        if m.gold_composite:
            obj["gold_composite"] = True
        mentions.append(obj)
    return {"doc_id": doc.doc_id, "text": doc.text, "mentions": mentions}


def sentence_spans(text: str) -> list[tuple[int, int]]:
    """Character spans of sentences, splitting on {. ! ? ;} + whitespace.

    A period preceded by a known abbreviation or a single letter does not end
    a sentence. Spans cover the whole text (whitespace between sentences is
    attached to the preceding span) so every offset falls in exactly one span.
    """
    boundaries: list[int] = []
    for i, ch in enumerate(text):
        if ch not in _TERMINATORS:
            continue
        if i + 1 < len(text) and not text[i + 1].isspace():
            continue
        if ch == "." and _guarded_abbreviation(text, i):
            continue
        # Boundary after the terminator and any following whitespace run.
        j = i + 1
        while j < len(text) and text[j].isspace():
            j += 1
        boundaries.append(j)
    spans: list[tuple[int, int]] = []
    start = 0
    for b in boundaries:
        if b > start:
            spans.append((start, b))
            start = b
    if start < len(text):
        spans.append((start, len(text)))
    if not spans:
        spans.append((0, len(text)))
    return spans


def _guarded_abbreviation(text: str, dot_index: int) -> bool:
    head = text[:dot_index]
    match = re.search(r"(\S+)$", head)
    if not match:
        return False
    token = match.group(1).lower().strip("(\"'")
    if len(token) == 1 and token.isalpha():
        return True
    return token in _ABBREVIATIONS or token.rstrip(".") in _ABBREVIATIONS


def sentence_containing(text: str, start: int, end: int) -> tuple[int, int]:
    """Span of the sentence(s) covering [start, end); merges across a split
    that falls inside the mention."""
    spans = sentence_spans(text)
    lo = hi = None
    for s, e in spans:
        if s <= start < e:
            lo = (s, e)
        if s < end <= e:
            hi = (s, e)
    if lo is None or hi is None:
        return (0, len(text))
    return (lo[0], hi[1])
