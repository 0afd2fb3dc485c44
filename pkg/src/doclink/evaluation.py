"""Recall metrics with document-level bootstrap intervals, subset breakdowns,
and copy-wrong-memory error rates.

All metrics treat a gold-annotated mention without a prediction record as a
miss. Confidence intervals are percentile intervals over document-level
resamples with replacement; the point estimate is always the plain metric on
the unresampled corpus.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .documents import DocumentRecord
from .kb import KnowledgeBase, TargetInventory
from .predictions import PredictionRecord, index_by_mention
from .textnorm import normalize

PredIndex = Mapping[tuple[str, int], PredictionRecord]
Metric = Callable[[PredIndex, Sequence[DocumentRecord]], float | None]


@dataclass(frozen=True)
class EvalConfig:
    ks: tuple[int, ...] = (1, 5)
    bootstrap_B: int = 1000
    bootstrap_seed: int = 0
    ci_level: float = 0.95

    def __post_init__(self):
        if self.bootstrap_B < 1:
            raise ValueError("bootstrap_B must be >= 1")
        if any(k < 1 for k in self.ks):
            raise ValueError("recall cutoffs must be positive")
        if not (0.0 < self.ci_level < 1.0):
            raise ValueError("ci_level must lie in (0, 1)")


def _gold_mentions(doc: DocumentRecord):
    return [(t, m) for t, m in enumerate(doc.mentions) if m.gold_id is not None]


def recall_at_k(
    predictions: PredIndex, corpus: Sequence[DocumentRecord], k: int
) -> float | None:
    """Fraction of gold-annotated mentions whose gold id is in the top-k.

    None when the corpus has no gold-annotated mentions.
    """
    hits = total = 0
    for doc in corpus:
        for t, mention in _gold_mentions(doc):
            total += 1
            rec = predictions.get((doc.doc_id, t))
            if rec is not None and mention.gold_id in rec.concept_ids()[:k]:
                hits += 1
    if total == 0:
        return None
    return hits / total


class UndefinedCIError(ValueError):
    pass


def _resample_indices(n_docs: int, b: int, seed: int) -> list[int]:
    # Substream per resample, derived arithmetically so results do not depend
    # on hash randomization or execution order.
    rng = random.Random(seed * 1_000_003 + b)
    return [rng.randrange(n_docs) for _ in range(n_docs)]


def bootstrap_ci(
    predictions: PredIndex,
    corpus: Sequence[DocumentRecord],
    metric: Metric,
    config: EvalConfig = EvalConfig(),
) -> tuple[float, float]:
    """(point estimate, CI half-width) for a document-level metric.

    Resamples documents with replacement B times, recomputes the metric per
    resample, and takes the percentile interval at ``ci_level``. Deterministic
    for a fixed seed. Raises UndefinedCIError on a single-document corpus.
    """
    if len(corpus) < 2:
        raise UndefinedCIError("bootstrap CI undefined for fewer than 2 documents")
    point = metric(predictions, corpus)
    if point is None:
        raise UndefinedCIError("metric undefined on the unresampled corpus")
    values = []
    for b in range(config.bootstrap_B):
        idx = _resample_indices(len(corpus), b, config.bootstrap_seed)
        val = metric(predictions, [corpus[i] for i in idx])
        if val is not None:
            values.append(val)
    if not values:
        raise UndefinedCIError("metric undefined on every bootstrap resample")
    alpha = 1.0 - config.ci_level
    lo, hi = np.quantile(values, [alpha / 2.0, 1.0 - alpha / 2.0])
    return point, float(hi - lo) / 2.0


@dataclass
class SubsetLabeler:
    """Per-mention subset labels for the breakdown table.

    ``training_concept_ids`` drives seen/unseen rows (omitted when None);
    ``synonyms_by_concept`` (normalized synonym sets from the KB) drives the
    identical-match rows; ``excluded_concept_ids`` flags mentions whose gold
    concept has no inventory string and therefore counts as an automatic miss.
    """

    training_concept_ids: set[str] | None = None
    synonyms_by_concept: dict[str, set[str]] | None = None
    excluded_concept_ids: set[str] = field(default_factory=set)

    @classmethod
    def from_kb(
        cls,
        kb: KnowledgeBase,
        inventory: TargetInventory | None = None,
        training_concept_ids: set[str] | None = None,
    ) -> "SubsetLabeler":
        synonyms = {
            cid: kb.normalized_synonyms(cid) for cid in kb.concepts
        }
        excluded = (
            {e.concept_id for e in inventory.excluded_concepts}
            if inventory is not None
            else set()
        )
        return cls(
            training_concept_ids=training_concept_ids,
            synonyms_by_concept=synonyms,
            excluded_concept_ids=excluded,
        )


def occurrence_indices(doc: DocumentRecord) -> dict[int, int]:
    """1-based occurrence index of each gold-annotated mention's concept
    within its document (1 = first appearance of that concept)."""
    counts: dict[str, int] = {}
    out: dict[int, int] = {}
    for t, mention in _gold_mentions(doc):
        counts[mention.gold_id] = counts.get(mention.gold_id, 0) + 1
        out[t] = counts[mention.gold_id]
    return out


@dataclass
class SubsetRow:
    key: str
    label: str
    metric_name: str
    support_n: int
    support_pct: float
    value: float | None
    half_width: float | None


MentionFilter = Callable[[DocumentRecord, int], bool]


def _subset_recall(
    predictions: PredIndex,
    docs: Sequence[DocumentRecord],
    member: MentionFilter,
    k: int,
) -> float | None:
    hits = total = 0
    for doc in docs:
        for t, mention in _gold_mentions(doc):
            if not member(doc, t):
                continue
            total += 1
            rec = predictions.get((doc.doc_id, t))
            if rec is not None and mention.gold_id in rec.concept_ids()[:k]:
                hits += 1
    if total == 0:
        return None
    return hits / total


def subset_breakdown(
    predictions: PredIndex,
    corpus: Sequence[DocumentRecord],
    labeler: SubsetLabeler,
    config: EvalConfig = EvalConfig(),
) -> list[SubsetRow]:
    """Recall table over the mention subsets, with bootstrap half-widths.

    Rows: overall recall at each configured cutoff; seen/unseen (when training
    ids are configured); identical/not-identical surface match (when synonym
    sets are configured); single/multi-word; first/recurring occurrence plus
    recurrence-rank buckets; simple/composite (when the corpus carries
    composite flags); and a flagged row for mentions whose gold concept is
    excluded from the inventory. All resamples share the same substreams, so
    the table is deterministic for a fixed seed.
    """
    occ: dict[tuple[str, int], int] = {}
    for doc in corpus:
        for t, idx in occurrence_indices(doc).items():
            occ[(doc.doc_id, t)] = idx

    def always(doc: DocumentRecord, t: int) -> bool:
        return True

    def seen(doc, t):
        return doc.mentions[t].gold_id in labeler.training_concept_ids

    def unseen(doc, t):
        return not seen(doc, t)

    def identical(doc, t):
        syns = labeler.synonyms_by_concept.get(doc.mentions[t].gold_id, set())
        return normalize(doc.mentions[t].surface) in syns

    def not_identical(doc, t):
        return not identical(doc, t)

    def single_word(doc, t):
        return len(doc.mentions[t].surface.split()) == 1

    def multi_word(doc, t):
        return not single_word(doc, t)

    def first(doc, t):
        return occ[(doc.doc_id, t)] == 1

    def recurring(doc, t):
        return occ[(doc.doc_id, t)] >= 2

    def occ_rank(rank):
        if rank < 5:
            return lambda doc, t: occ[(doc.doc_id, t)] == rank
        return lambda doc, t: occ[(doc.doc_id, t)] >= 5

    def composite(doc, t):
        return doc.mentions[t].gold_composite

    def simple(doc, t):
        return not composite(doc, t)

    def excluded_gold(doc, t):
        return doc.mentions[t].gold_id in labeler.excluded_concept_ids

    subsets: list[tuple[str, str, MentionFilter, int]] = []
    for k in config.ks:
        subsets.append((f"recall@{k}_overall", f"Recall@{k} overall", always, k))
    if labeler.training_concept_ids is not None:
        subsets.append(("seen", "Seen concepts", seen, 1))
        subsets.append(("unseen", "Unseen concepts", unseen, 1))
    if labeler.synonyms_by_concept is not None:
        subsets.append(("identical", "Identical surface", identical, 1))
        subsets.append(("not_identical", "Not identical surface", not_identical, 1))
    subsets.append(("single_word", "Single word", single_word, 1))
    subsets.append(("multi_word", "Multi-word", multi_word, 1))
    subsets.append(("first", "First occurrence", first, 1))
    subsets.append(("recurring", "Recurring occurrence", recurring, 1))
    subsets.append(("occ_2nd", "2nd occurrence", occ_rank(2), 1))
    subsets.append(("occ_3rd", "3rd occurrence", occ_rank(3), 1))
    subsets.append(("occ_4th", "4th occurrence", occ_rank(4), 1))
    subsets.append(("occ_5th_plus", "5th+ occurrence", occ_rank(5), 1))
    if any(m.gold_composite for doc in corpus for m in doc.mentions):
        subsets.append(("simple", "Simple concepts", simple, 1))
        subsets.append(("composite", "Composite concepts", composite, 1))
    if labeler.excluded_concept_ids:
        subsets.append(
            ("excluded_gold", "Gold concept excluded from inventory", excluded_gold, 1)
        )

    total_mentions = sum(len(_gold_mentions(doc)) for doc in corpus)
    resamples = None
    if len(corpus) >= 2:
        resamples = [
            _resample_indices(len(corpus), b, config.bootstrap_seed)
            for b in range(config.bootstrap_B)
        ]

    rows: list[SubsetRow] = []
    alpha = 1.0 - config.ci_level
    for key, label, member, k in subsets:
        support = sum(
            1 for doc in corpus for t, _ in _gold_mentions(doc) if member(doc, t)
        )
        value = _subset_recall(predictions, corpus, member, k)
        half_width = None
        if resamples is not None and value is not None:
            vals = []
            for idx in resamples:
                v = _subset_recall(predictions, [corpus[i] for i in idx], member, k)
                if v is not None:
                    vals.append(v)
            if vals:
                lo, hi = np.quantile(vals, [alpha / 2.0, 1.0 - alpha / 2.0])
                half_width = float(hi - lo) / 2.0
        rows.append(
            SubsetRow(
                key=key,
                label=label,
                metric_name=f"recall@{k}",
                support_n=support,
                support_pct=100.0 * support / total_mentions if total_mentions else 0.0,
                value=value,
                half_width=half_width,
            )
        )
    return rows


@dataclass(frozen=True)
class CwmeResult:
    echoed: int
    exposed: int

    @property
    def value(self) -> float | None:
        """Percentage of exposed mentions echoing the first wrong prediction;
        None (undefined) when nothing was exposed."""
        if self.exposed == 0:
            return None
        return 100.0 * self.echoed / self.exposed


def _top_prediction(predictions: PredIndex, doc_id: str, t: int) -> str:
    rec = predictions.get((doc_id, t))
    if rec is not None and rec.top_concept is not None:
        return rec.top_concept
    # Unique sentinel: a missing prediction is wrong but never echoes another.
    return f"\x00missing:{doc_id}:{t}"


def cwme(
    predictions: PredIndex,
    corpus: Sequence[DocumentRecord],
    group: str | None = None,
) -> CwmeResult:
    """Copy-wrong-memory error rate over rank-1 predictions.

    For each (document, gold concept) with mentions in order: once the first
    incorrect prediction e' appears, every later mention of the concept is
    exposed; echoes are the exposed mentions predicted exactly e'. Aggregates
    only concepts with an initial error and at least one exposed mention.
    Restricting to ``group`` keeps only concepts whose mentions carry it.
    """
    echoed = exposed = 0
    for doc in corpus:
        by_concept: dict[str, list[int]] = {}
        for t, mention in _gold_mentions(doc):
            if group is not None and mention.group != group:
                continue
            by_concept.setdefault(mention.gold_id, []).append(t)
        for gold_id, idxs in by_concept.items():
            preds = [_top_prediction(predictions, doc.doc_id, t) for t in idxs]
            wrong_at = next(
                (i for i, p in enumerate(preds) if p != gold_id), None
            )
            if wrong_at is None:
                continue
            later = preds[wrong_at + 1 :]
            if not later:
                continue
            exposed += len(later)
            echoed += sum(1 for p in later if p == preds[wrong_at])
    return CwmeResult(echoed=echoed, exposed=exposed)


@dataclass
class DeltaCwmeRow:
    group: str
    robust: CwmeResult
    baseline: CwmeResult

    @property
    def delta(self) -> float | None:
        """Signed percentage-point change; negative means fewer copied errors.
        None when either side is undefined."""
        if self.robust.value is None or self.baseline.value is None:
            return None
        return self.robust.value - self.baseline.value


def delta_cwme(
    robust_predictions: PredIndex,
    baseline_predictions: PredIndex,
    corpus: Sequence[DocumentRecord],
) -> list[DeltaCwmeRow]:
    """Overall and per-semantic-group CWME difference (robust - baseline)."""
    groups = sorted(
        {m.group for doc in corpus for m in doc.mentions if m.gold_id is not None}
    )
    rows = [
        DeltaCwmeRow(
            group="overall",
            robust=cwme(robust_predictions, corpus),
            baseline=cwme(baseline_predictions, corpus),
        )
    ]
    for g in groups:
        rows.append(
            DeltaCwmeRow(
                group=g,
                robust=cwme(robust_predictions, corpus, group=g),
                baseline=cwme(baseline_predictions, corpus, group=g),
            )
        )
    return rows


def predictions_index(records: Sequence[PredictionRecord]) -> PredIndex:
    return index_by_mention(records)
