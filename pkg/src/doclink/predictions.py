"""Prediction-file format: line-delimited JSON with a leading header line.

Header: ``{"format": "doclink-predictions", "version": 1, "variant": ...}``.
Records: ``{"doc_id", "mention_index", "variant", "candidates": [{"rank",
"concept_id", "target", "score"}], "error"?}`` sorted by (doc_id,
mention_index). A record with an ``error`` field and no candidates marks a
mention the linker could not decode (hard miss).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .decoding import Candidate, RankedCandidates

FORMAT_NAME = "doclink-predictions"
FORMAT_VERSION = 1


class PredictionFormatError(ValueError):
    pass


@dataclass
class PredictionRecord:
    doc_id: str
    mention_index: int
    variant: str
    candidates: list[Candidate] = field(default_factory=list)
    error: str | None = None

    @property
    def top_concept(self) -> str | None:
        return self.candidates[0].concept_id if self.candidates else None

    def concept_ids(self) -> list[str]:
        return [c.concept_id for c in self.candidates]

    @classmethod
    def from_ranked(
        cls, doc_id: str, mention_index: int, variant: str, ranked: RankedCandidates
    ) -> "PredictionRecord":
        return cls(
            doc_id=doc_id,
            mention_index=mention_index,
            variant=variant,
            candidates=list(ranked.items),
        )


def write_predictions(
    records: Iterable[PredictionRecord], path: str | Path, variant: str
) -> None:
    ordered = sorted(records, key=lambda r: (r.doc_id, r.mention_index))
    with Path(path).open("w", encoding="utf-8") as fh:
        header = {"format": FORMAT_NAME, "version": FORMAT_VERSION, "variant": variant}
        fh.write(json.dumps(header, ensure_ascii=False) + "\n")
        for rec in ordered:
            obj = {
                "doc_id": rec.doc_id,
                "mention_index": rec.mention_index,
                "variant": rec.variant,
                "candidates": [
                    {
                        "rank": i + 1,
                        "concept_id": c.concept_id,
                        "target": c.target,
                        "score": c.score,
                    }
                    for i, c in enumerate(rec.candidates)
                ],
            }
            if rec.error is not None:
                obj["error"] = rec.error
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def read_predictions(path: str | Path) -> tuple[str, list[PredictionRecord]]:
    """Returns (variant from header, records)."""
    path = Path(path)
    records: list[PredictionRecord] = []
    with path.open(encoding="utf-8") as fh:
        first = fh.readline()
        if not first.strip():
            raise PredictionFormatError(f"{path}: missing header line")
        header = json.loads(first)
        if header.get("format") != FORMAT_NAME:
            raise PredictionFormatError(f"{path}: not a prediction file")
        if header.get("version") != FORMAT_VERSION:
            raise PredictionFormatError(
                f"{path}: unsupported prediction format version {header.get('version')}"
            )
        variant = header.get("variant", "")
        for lineno, raw in enumerate(fh, start=2):
            line = raw.strip()
            if not line:
                continue
            obj = json.loads(line)
            try:
                candidates = [
                    Candidate(
                        concept_id=c["concept_id"],
                        target=c["target"],
                        score=c["score"],
                    )
                    for c in obj["candidates"]
                ]
                records.append(
                    PredictionRecord(
                        doc_id=obj["doc_id"],
                        mention_index=obj["mention_index"],
                        variant=obj["variant"],
                        candidates=candidates,
                        error=obj.get("error"),
                    )
                )
            except (KeyError, TypeError) as exc:
                raise PredictionFormatError(
                    f"{path}:{lineno}: missing field {exc}"
                ) from exc
    return variant, records


def index_by_mention(
    records: Iterable[PredictionRecord],
) -> dict[tuple[str, int], PredictionRecord]:
    return {(r.doc_id, r.mention_index): r for r in records}
