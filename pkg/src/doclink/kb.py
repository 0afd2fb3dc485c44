"""Knowledge-base ingestion and unambiguous target-string selection.

The KB file is a UTF-8 TSV with three columns per row
(``concept_id<TAB>semantic_group<TAB>synonym``) and optional ``#`` comment
lines. After ingestion, synonyms shared by two or more concepts within one
semantic group are dropped; what remains is the target inventory, where every
(group, string) pair resolves to exactly one concept. Per-mention target
strings are picked by character-trigram TF-IDF cosine similarity.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path

from .textnorm import cosine, nfc, normalize, trigrams


class KBFormatError(ValueError):
    """Malformed KB file (bad column count, conflicting groups, empty file)."""


class NoTargetError(LookupError):
    """Concept has no unambiguous synonym left in the inventory."""


@dataclass(frozen=True)
class Concept:
    id: str
    group: str
    synonyms: tuple[str, ...]


@dataclass
class KnowledgeBase:
    concepts: dict[str, Concept]
    groups: set[str]

    def synonym_count(self) -> int:
        return sum(len(c.synonyms) for c in self.concepts.values())

    def normalized_synonyms(self, concept_id: str) -> set[str]:
        """Normalized forms of all synonyms of a concept (for exact-match tests)."""
        return {normalize(s) for s in self.concepts[concept_id].synonyms}


@dataclass(frozen=True)
class Exclusion:
    concept_id: str
    group: str
    reason: str


@dataclass
class TargetInventory:
    """Per-group mapping from unambiguous target strings to concept ids."""

    entries: dict[tuple[str, str], str]
    excluded_concepts: list[Exclusion]
    group_of: dict[str, str] = field(default_factory=dict)
    _by_concept: dict[str, list[str]] = field(default_factory=dict)
    _stats: dict[str, "TfidfStats"] = field(default_factory=dict, repr=False)

    def targets_for(self, concept_id: str) -> list[str]:
        return self._by_concept.get(concept_id, [])

    def group_entries(self, group: str) -> dict[str, str]:
        return {s: c for (g, s), c in self.entries.items() if g == group}

    def groups(self) -> list[str]:
        return sorted({g for g, _ in self.entries})

    def stats(self, group: str) -> "TfidfStats":
        """TF-IDF corpus statistics over the group's target strings (cached)."""
        if group not in self._stats:
            self._stats[group] = TfidfStats.build(sorted(self.group_entries(group)))
        return self._stats[group]

    def exclusion_reason(self, concept_id: str) -> str | None:
        for exc in self.excluded_concepts:
            if exc.concept_id == concept_id:
                return exc.reason
        return None


def load_kb(path: str | Path) -> KnowledgeBase:
    """Ingest a KB TSV file.

    Duplicate (concept, synonym) rows are collapsed; synonym text is stored
    NFC-normalized. Raises KBFormatError on a row with the wrong column count
    (naming the line), on conflicting groups for one concept id, and on a file
    with no data rows.
    """
    path = Path(path)
    synonyms: dict[str, list[str]] = defaultdict(list)
    seen_rows: set[tuple[str, str]] = set()
    group_by_id: dict[str, str] = {}
    n_rows = 0
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                raise KBFormatError(
                    f"{path}:{lineno}: expected 3 tab-separated columns, got {len(cols)}"
                )
            concept_id, group, synonym = (c.strip() for c in cols)
            if not concept_id or not group or not synonym:
                raise KBFormatError(f"{path}:{lineno}: empty field in row")
            prev = group_by_id.get(concept_id)
            if prev is not None and prev != group:
                raise KBFormatError(
                    f"{path}:{lineno}: concept {concept_id} listed under groups "
                    f"{prev!r} and {group!r}"
                )
            group_by_id[concept_id] = group
            synonym = nfc(synonym)
            n_rows += 1
            if (concept_id, synonym) in seen_rows:
                continue
            seen_rows.add((concept_id, synonym))
            synonyms[concept_id].append(synonym)
    if n_rows == 0:
        raise KBFormatError(f"{path}: no data rows in KB file")
    concepts = {
        cid: Concept(id=cid, group=group_by_id[cid], synonyms=tuple(syns))
        for cid, syns in synonyms.items()
    }
    return KnowledgeBase(concepts=concepts, groups=set(group_by_id.values()))


def filter_unambiguous(kb: KnowledgeBase) -> TargetInventory:
    """Drop every synonym string attached to two or more concepts in its group.

    Comparison runs on normalized forms, so case or spacing variants of one
    surface form cannot defeat the one-string-one-concept guarantee. Concepts
    left with no synonym are excluded and reported.
    """
    if not kb.concepts:
        raise KBFormatError("empty knowledge base")
    owners: dict[tuple[str, str], set[str]] = defaultdict(set)
    for concept in kb.concepts.values():
        for syn in concept.synonyms:
            owners[(concept.group, normalize(syn))].add(concept.id)

    entries: dict[tuple[str, str], str] = {}
    by_concept: dict[str, list[str]] = defaultdict(list)
    excluded: list[Exclusion] = []
    group_of: dict[str, str] = {}
    for cid in sorted(kb.concepts):
        concept = kb.concepts[cid]
        group_of[cid] = concept.group
        kept = [
            syn
            for syn in concept.synonyms
            if len(owners[(concept.group, normalize(syn))]) == 1
        ]
        if not kept:
            excluded.append(
                Exclusion(
                    concept_id=cid,
                    group=concept.group,
                    reason="all synonyms shared with other concepts in group",
                )
            )
            continue
        for syn in kept:
            entries[(concept.group, syn)] = cid
            by_concept[cid].append(syn)
    inv = TargetInventory(
        entries=entries, excluded_concepts=excluded, group_of=group_of
    )
    inv._by_concept = dict(by_concept)
    return inv


@dataclass
class TfidfStats:
    """Character-trigram document frequencies over one group's inventory."""

    n_docs: int
    df: dict[str, int]

    @classmethod
    def build(cls, strings: list[str]) -> "TfidfStats":
        df: Counter = Counter()
        for s in strings:
            df.update(set(trigrams(s)))
        return cls(n_docs=len(strings), df=dict(df))

    def idf(self, gram: str) -> float:
        return math.log((self.n_docs + 1) / (self.df.get(gram, 0) + 1)) + 1.0

    def vector(self, text: str) -> dict[str, float]:
        return {g: tf * self.idf(g) for g, tf in trigrams(text).items()}


def tfidf_similarity(a: str, b: str, stats: TfidfStats) -> float:
    """Cosine similarity of trigram TF-IDF vectors; 1.0 for equal non-empty forms."""
    return cosine(stats.vector(a), stats.vector(b))


def select_target(mention: str, concept_id: str, inventory: TargetInventory) -> str:
    """Pick the concept's inventory string most similar to the mention.

    Ties break toward the shorter string, then lexicographic byte order.
    Raises NoTargetError when the concept has no inventory entry.
    """
    candidates = inventory.targets_for(concept_id)
    if not candidates:
        reason = inventory.exclusion_reason(concept_id) or "concept not in inventory"
        raise NoTargetError(f"no target string for {concept_id}: {reason}")
    group = inventory.group_of[concept_id]
    stats = inventory.stats(group)
    return min(
        candidates,
        key=lambda s: (-tfidf_similarity(mention, s, stats), len(s), s.encode("utf-8")),
    )


def write_inventory_tsv(inventory: TargetInventory, path: str | Path) -> None:
    """Export entries as ``group<TAB>target_string<TAB>concept_id`` rows."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for (group, target), cid in sorted(inventory.entries.items()):
            fh.write(f"{group}\t{target}\t{cid}\n")


def read_inventory_tsv(path: str | Path) -> TargetInventory:
    entries: dict[tuple[str, str], str] = {}
    by_concept: dict[str, list[str]] = defaultdict(list)
    group_of: dict[str, str] = {}
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                raise KBFormatError(
                    f"{path}:{lineno}: expected 3 columns, got {len(cols)}"
                )
            group, target, cid = cols
            entries[(group, target)] = cid
            by_concept[cid].append(target)
            group_of[cid] = group
    inv = TargetInventory(entries=entries, excluded_concepts=[], group_of=group_of)
    inv._by_concept = dict(by_concept)
    return inv


def write_exclusions_tsv(inventory: TargetInventory, path: str | Path) -> None:
    """Export exclusions as ``concept_id<TAB>group<TAB>reason`` rows."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for exc in sorted(inventory.excluded_concepts, key=lambda e: e.concept_id):
            fh.write(f"{exc.concept_id}\t{exc.group}\t{exc.reason}\n")
