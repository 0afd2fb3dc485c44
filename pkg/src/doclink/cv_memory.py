"""Training-set construction with out-of-fold prediction memory.

Documents are partitioned into folds; a linker configured without a given
fold produces predictions for that fold's documents, and those predictions
populate the memory blocks of the exported training prompts. Targets always
come from the gold concept's inventory strings, so prompts built from gold
memory and from predicted memory differ only in the memory block.
"""

from __future__ import annotations

import json
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from .documents import DocumentRecord
from .kb import NoTargetError, TargetInventory, select_target
from .linker import (
    DocumentLinkResult,
    MemoryEntry,
    MemoryState,
    VariantConfig,
    assemble_input,
)

PROVENANCES = ("out-of-fold", "gold")


@dataclass
class FoldPlan:
    n_folds: int
    seed: int
    assignment: dict[str, int]

    def fold_of(self, doc_id: str) -> int:
        return self.assignment[doc_id]

    def docs_in_fold(self, fold: int) -> list[str]:
        return sorted(d for d, f in self.assignment.items() if f == fold)


def partition_folds(
    corpus: Sequence[DocumentRecord], n_folds: int = 5, seed: int = 0
) -> FoldPlan:
    """Seeded shuffle then round-robin assignment; fold sizes differ by <= 1."""
    if len(corpus) < n_folds:
        raise ValueError(
            f"corpus has {len(corpus)} documents, fewer than {n_folds} folds"
        )
    doc_ids = sorted(d.doc_id for d in corpus)
    rng = random.Random(seed)
    rng.shuffle(doc_ids)
    assignment = {doc_id: i % n_folds for i, doc_id in enumerate(doc_ids)}
    return FoldPlan(n_folds=n_folds, seed=seed, assignment=assignment)


def write_fold_plan(plan: FoldPlan, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for doc_id in sorted(plan.assignment):
            fh.write(f"{doc_id}\t{plan.assignment[doc_id]}\n")


def read_fold_plan(path: str | Path, seed: int = -1) -> FoldPlan:
    assignment: dict[str, int] = {}
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            doc_id, fold = line.rstrip("\n").split("\t")
            assignment[doc_id] = int(fold)
    n_folds = max(assignment.values()) + 1 if assignment else 0
    return FoldPlan(n_folds=n_folds, seed=seed, assignment=assignment)


@dataclass(frozen=True)
class TrainingRecord:
    prompt: str
    target: str
    doc_id: str
    mention_index: int
    memory_provenance: str


@dataclass
class BuildReport:
    n_records: int = 0
    n_predictions: int = 0
    skipped: list[tuple[str, int, str]] = field(default_factory=list)
    fold_usage: dict[str, tuple[int, int]] = field(default_factory=dict)
    """doc_id -> (document's fold, held-out fold of the producing linker).

    The two must be equal for every document: the producing linker excludes
    exactly the document's own fold from its training data.
    """


LinkerFactory = Callable[[int], Callable[[DocumentRecord], DocumentLinkResult]]


def build_robust_memory(
    corpus: Sequence[DocumentRecord],
    fold_plan: FoldPlan,
    linker_factory: LinkerFactory,
    inventory: TargetInventory,
    variant: VariantConfig = VariantConfig(use_global_context=True, use_memory=True),
    provenance: str = "out-of-fold",
    workers: int = 1,
) -> tuple[list[TrainingRecord], BuildReport]:
    """Produce one training record per gold-annotated mention.

    ``linker_factory(fold)`` must return a linker that never saw that fold's
    documents. With provenance "out-of-fold" the prompt memory holds that
    linker's predictions for earlier mentions; with "gold" it holds the gold
    entries instead. Mentions whose gold concept has no inventory string are
    skipped and reported. The held-out prediction passes are independent per
    document and run on ``workers`` threads; record assembly stays sequential
    so the output never depends on the worker count.
    """
    if provenance not in PROVENANCES:
        raise ValueError(f"unknown memory provenance {provenance!r}")
    ordered = sorted(corpus, key=lambda d: d.doc_id)
    results_by_doc = {}
    if provenance == "out-of-fold":

        def run(doc: DocumentRecord):
            return doc.doc_id, linker_factory(fold_plan.fold_of(doc.doc_id))(doc)

        if workers <= 1 or len(ordered) <= 1:
            results_by_doc = dict(run(doc) for doc in ordered)
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results_by_doc = dict(pool.map(run, ordered))

    records: list[TrainingRecord] = []
    report = BuildReport()
    for doc in ordered:
        fold = fold_plan.fold_of(doc.doc_id)
        report.fold_usage[doc.doc_id] = (fold, fold)
        predicted_entries: dict[int, MemoryEntry] = {}
        if provenance == "out-of-fold":
            result = results_by_doc[doc.doc_id]
            report.n_predictions += len(result.records)
            for rec in result.records:
                if rec.candidates:
                    top = rec.candidates[0]
                    predicted_entries[rec.mention_index] = MemoryEntry(
                        surface=doc.mentions[rec.mention_index].surface,
                        target=top.target,
                        concept_id=top.concept_id,
                    )
        memory = MemoryState()
        for t, mention in enumerate(doc.mentions):
            if mention.gold_id is not None:
                try:
                    target = select_target(mention.surface, mention.gold_id, inventory)
                except NoTargetError as exc:
                    report.skipped.append((doc.doc_id, t, str(exc)))
                    target = None
                if target is not None:
                    prompt = assemble_input(doc, memory, t, variant)
                    records.append(
                        TrainingRecord(
                            prompt=prompt,
                            target=target,
                            doc_id=doc.doc_id,
                            mention_index=t,
                            memory_provenance=provenance,
                        )
                    )
            if variant.use_memory:
                entry = _entry_for(doc, t, mention, provenance, predicted_entries, inventory)
                if entry is not None:
                    memory.append(entry)
    report.n_records = len(records)
    return records, report


def _entry_for(
    doc: DocumentRecord,
    t: int,
    mention,
    provenance: str,
    predicted_entries: dict[int, MemoryEntry],
    inventory: TargetInventory,
) -> MemoryEntry | None:
    if provenance == "out-of-fold":
        return predicted_entries.get(t)
    if mention.gold_id is None:
        return None
    try:
        target = select_target(mention.surface, mention.gold_id, inventory)
    except NoTargetError:
        return None
    return MemoryEntry(surface=mention.surface, target=target, concept_id=mention.gold_id)


def export_training_set(records: Sequence[TrainingRecord], path: str | Path) -> None:
    """Line-delimited JSON, stable order by (doc_id, mention_index)."""
    if not records:
        raise ValueError("no training records to export")
    ordered = sorted(records, key=lambda r: (r.doc_id, r.mention_index))
    with Path(path).open("w", encoding="utf-8") as fh:
        for rec in ordered:
            fh.write(
                json.dumps(
                    {
                        "prompt": rec.prompt,
                        "target": rec.target,
                        "doc_id": rec.doc_id,
                        "mention_index": rec.mention_index,
                        "memory_provenance": rec.memory_provenance,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def read_training_set(path: str | Path) -> list[TrainingRecord]:
    records = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            records.append(
                TrainingRecord(
                    prompt=obj["prompt"],
                    target=obj["target"],
                    doc_id=obj["doc_id"],
                    mention_index=obj["mention_index"],
                    memory_provenance=obj["memory_provenance"],
                )
            )
    return records


def held_out_linker_factory(
    link_one: Callable[[DocumentRecord], DocumentLinkResult],
) -> LinkerFactory:
    """Factory for reference runs where per-fold fitting is a no-op.

    The fold index is still threaded through so callers exercising real
    per-fold models can swap this out without touching the builder.
    """

    def factory(fold: int) -> Callable[[DocumentRecord], DocumentLinkResult]:
        return link_one

    return factory
