"""Reciprocal rank fusion of per-mention candidate lists.

Each candidate concept e scores ``sum over lists of 1 / (k + rank(e))`` with
1-based ranks; lists where e is unranked contribute zero. Ties break by the
best single-list rank, then by concept id.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .decoding import Candidate, RankedCandidates
from .predictions import PredictionRecord, index_by_mention


@dataclass(frozen=True)
class FusionConfig:
    k: float = 60.0
    top_k_out: int | None = None

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError("rank offset k must be positive")


class MissingVariantError(ValueError):
    pass


def rrf_fuse(
    lists: Sequence[RankedCandidates], config: FusionConfig = FusionConfig()
) -> RankedCandidates:
    if not lists:
        raise ValueError("need at least one candidate list to fuse")
    scores: dict[str, float] = {}
    best_rank: dict[str, int] = {}
    target_of: dict[str, str] = {}
    for ranked in lists:
        for rank, cand in enumerate(ranked.items, start=1):
            scores[cand.concept_id] = scores.get(cand.concept_id, 0.0) + 1.0 / (
                config.k + rank
            )
            if rank < best_rank.get(cand.concept_id, 1 << 30):
                best_rank[cand.concept_id] = rank
                target_of[cand.concept_id] = cand.target
    ordered = sorted(
        scores, key=lambda cid: (-scores[cid], best_rank[cid], cid)
    )
    if config.top_k_out is not None:
        ordered = ordered[: config.top_k_out]
    items = [
        Candidate(concept_id=cid, target=target_of[cid], score=scores[cid])
        for cid in ordered
    ]
    return RankedCandidates(items=items)


def ensemble_predictions(
    runs: Mapping[str, Iterable[PredictionRecord]],
    required_variants: Sequence[str],
    config: FusionConfig = FusionConfig(),
) -> list[PredictionRecord]:
    """Fuse per-mention candidate lists across variant runs.

    ``runs`` maps variant name to that run's records; every variant in
    ``required_variants`` must be present. Mentions are taken from the union
    of all runs; a run missing a mention simply contributes no ranks for it.
    """
    missing = [v for v in required_variants if v not in runs]
    if missing:
        raise MissingVariantError(
            "missing variant run(s): " + ", ".join(sorted(missing))
        )
    indexed = {variant: index_by_mention(records) for variant, records in runs.items()}
    keys = sorted({key for idx in indexed.values() for key in idx})
    fused: list[PredictionRecord] = []
    for doc_id, mention_index in keys:
        lists = []
        for variant in required_variants:
            rec = indexed[variant].get((doc_id, mention_index))
            if rec is not None and rec.candidates:
                lists.append(RankedCandidates(items=rec.candidates))
        if not lists:
            fused.append(
                PredictionRecord(
                    doc_id=doc_id,
                    mention_index=mention_index,
                    variant="ensemble",
                    candidates=[],
                    error="no candidates in any variant",
                )
            )
            continue
        merged = rrf_fuse(lists, config)
        fused.append(
            PredictionRecord(
                doc_id=doc_id,
                mention_index=mention_index,
                variant="ensemble",
                candidates=list(merged.items),
            )
        )
    return fused
