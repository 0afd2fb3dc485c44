"""Sequential per-document linking with a dynamic prediction memory.

For each mention, in document order: assemble the prompt from (local sentence
or full document) context, the memory of earlier decisions, and the marked
mention with its semantic group; beam-decode against the group's trie; take
rank 1 as the prediction; append it to memory. Documents are independent and
may be processed in parallel; within a document the order is strictly
sequential because later prompts depend on earlier predictions.

Prompt template (bit-exact; the MEMORY block is omitted entirely when memory
is disabled, and present-but-empty before the first mention):

    CONTEXT:\\n<context>\\n\\nMEMORY:\\n<surface> -> <target> (<concept_id>)\\n...\\n\\nMENTION: <surface>\\nGROUP: <group>\\nTARGET:

The target mention is wrapped in ``[[`` ``]]`` inside the context; literal
backslashes and bracket sentinels in source text are backslash-escaped so the
marking is unambiguous.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .decoding import (
    DecodeConfig,
    DecodeError,
    LexicalOverlapScorer,
    MemoryEchoScorer,
    RankedCandidates,
    TokenScorer,
    UniformScorer,
    decode,
)
from .documents import DocumentRecord, MentionRecord, sentence_containing
from .kb import NoTargetError, TargetInventory, select_target
from .predictions import PredictionRecord
from .trie import TrieSet

MEMORY_SOURCES = ("self", "gold", "external")
VARIANT_NAMES = ("local", "global", "memory", "global+memory")


@dataclass(frozen=True)
class VariantConfig:
    use_global_context: bool = False
    use_memory: bool = False
    memory_source: str = "self"

    def __post_init__(self):
        if self.memory_source not in MEMORY_SOURCES:
            raise ValueError(f"unknown memory source {self.memory_source!r}")

    @property
    def name(self) -> str:
        if self.use_global_context and self.use_memory:
            return "global+memory"
        if self.use_global_context:
            return "global"
        if self.use_memory:
            return "memory"
        return "local"

    @classmethod
    def from_name(cls, name: str, memory_source: str = "self") -> "VariantConfig":
        if name not in VARIANT_NAMES:
            raise ValueError(f"unknown variant {name!r}; expected one of {VARIANT_NAMES}")
        return cls(
            use_global_context=name in ("global", "global+memory"),
            use_memory=name in ("memory", "global+memory"),
            memory_source=memory_source,
        )


@dataclass(frozen=True)
class MemoryEntry:
    surface: str
    target: str
    concept_id: str


@dataclass
class MemoryState:
    entries: list[MemoryEntry] = field(default_factory=list)
    capacity: int | None = None

    def append(self, entry: MemoryEntry) -> None:
        self.entries.append(entry)
        if self.capacity is not None and len(self.entries) > self.capacity:
            del self.entries[0 : len(self.entries) - self.capacity]

    def target_strings(self) -> list[str]:
        return [e.target for e in self.entries]


@dataclass(frozen=True)
class LinkStep:
    """Everything a scorer factory may condition on for one mention."""

    doc: DocumentRecord
    mention_index: int
    mention: MentionRecord
    prompt: str
    memory: MemoryState
    trie_set: TrieSet


ScorerFactory = Callable[[LinkStep], TokenScorer]


def uniform_factory(step: LinkStep) -> TokenScorer:
    return UniformScorer()


def lexical_factory(step: LinkStep) -> TokenScorer:
    return LexicalOverlapScorer(step.mention.surface, step.trie_set.tokenizer)


def memory_echo_factory(base: ScorerFactory, boost: float) -> ScorerFactory:
    def factory(step: LinkStep) -> TokenScorer:
        return MemoryEchoScorer(
            base(step), step.memory.target_strings(), boost, step.trie_set.tokenizer
        )

    return factory


def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace("[[", "\\[[").replace("]]", "\\]]")


def _marked_context(doc: DocumentRecord, mention: MentionRecord, use_global: bool) -> str:
    if use_global:
        before, after = doc.text[: mention.start], doc.text[mention.end :]
    else:
        lo, hi = sentence_containing(doc.text, mention.start, mention.end)
        # Sentence spans carry the inter-sentence whitespace; trim it here.
        before = doc.text[lo : mention.start].lstrip()
        after = doc.text[mention.end : hi].rstrip()
    return _escape(before) + "[[" + _escape(mention.surface) + "]]" + _escape(after)


def assemble_input(
    doc: DocumentRecord,
    memory: MemoryState,
    t: int,
    variant: VariantConfig,
) -> str:
    """Deterministic prompt for mention t under the canonical template."""
    mention = doc.mentions[t]
    parts = ["CONTEXT:\n", _marked_context(doc, mention, variant.use_global_context), "\n\n"]
    if variant.use_memory:
        parts.append("MEMORY:\n")
        for e in memory.entries:
            parts.append(f"{e.surface} -> {e.target} ({e.concept_id})\n")
        parts.append("\n")
    parts.append(f"MENTION: {mention.surface}\nGROUP: {mention.group}\nTARGET:")
    return "".join(parts)


@dataclass
class DocumentLinkResult:
    doc_id: str
    records: list[PredictionRecord]
    memory: MemoryState
    failures: list[tuple[int, str]] = field(default_factory=list)


def link_document(
    doc: DocumentRecord,
    trie_set: TrieSet,
    scorer_factory: ScorerFactory,
    variant: VariantConfig,
    config: DecodeConfig = DecodeConfig(),
    *,
    inventory: TargetInventory | None = None,
    external_memory: dict[tuple[str, int], MemoryEntry] | None = None,
    memory_capacity: int | None = None,
    on_prompt: Callable[[int, str], None] | None = None,
) -> DocumentLinkResult:
    """Link all mentions of one document in order.

    Mentions whose group has no trie, or whose decode exhausts, become hard
    misses (empty candidate record with an error) and linking continues. The
    gold memory source requires ``inventory`` to map gold ids to target
    strings; the external source requires ``external_memory`` keyed by
    (doc_id, mention_index).
    """
    if variant.memory_source == "gold" and variant.use_memory and inventory is None:
        raise ValueError("gold memory source requires an inventory")
    if variant.memory_source == "external" and variant.use_memory and external_memory is None:
        raise ValueError("external memory source requires an external memory map")
    memory = MemoryState(capacity=memory_capacity)
    records: list[PredictionRecord] = []
    failures: list[tuple[int, str]] = []
    for t, mention in enumerate(doc.mentions):
        prompt = assemble_input(doc, memory, t, variant)
        if on_prompt is not None:
            on_prompt(t, prompt)
        trie = trie_set.tries.get(mention.group)
        predicted: RankedCandidates | None = None
        error: str | None = None
        if trie is None:
            error = f"no trie for group {mention.group!r}"
        else:
            step = LinkStep(
                doc=doc,
                mention_index=t,
                mention=mention,
                prompt=prompt,
                memory=memory,
                trie_set=trie_set,
            )
            try:
                predicted = decode(prompt, trie, scorer_factory(step), config)
            except DecodeError as exc:
                error = str(exc)
        if predicted is not None:
            records.append(
                PredictionRecord.from_ranked(doc.doc_id, t, variant.name, predicted)
            )
        else:
            records.append(
                PredictionRecord(
                    doc_id=doc.doc_id,
                    mention_index=t,
                    variant=variant.name,
                    candidates=[],
                    error=error,
                )
            )
            failures.append((t, error or "unknown error"))
        if variant.use_memory:
            entry = _memory_entry_for(
                doc, t, mention, predicted, variant, inventory, external_memory
            )
            if entry is not None:
                memory.append(entry)
    return DocumentLinkResult(
        doc_id=doc.doc_id, records=records, memory=memory, failures=failures
    )


def _memory_entry_for(
    doc: DocumentRecord,
    t: int,
    mention: MentionRecord,
    predicted: RankedCandidates | None,
    variant: VariantConfig,
    inventory: TargetInventory | None,
    external_memory: dict[tuple[str, int], MemoryEntry] | None,
) -> MemoryEntry | None:
    if variant.memory_source == "external":
        return external_memory.get((doc.doc_id, t))
    if variant.memory_source == "gold":
        if mention.gold_id is None:
            return None
        try:
            target = select_target(mention.surface, mention.gold_id, inventory)
        except NoTargetError:
            return None
        return MemoryEntry(
            surface=mention.surface, target=target, concept_id=mention.gold_id
        )
    if predicted is None or not predicted.items:
        return None
    top = predicted.items[0]
    return MemoryEntry(
        surface=mention.surface, target=top.target, concept_id=top.concept_id
    )


@dataclass
class CorpusLinkReport:
    n_documents: int
    n_mentions: int
    failures: list[tuple[str, int, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def link_corpus(
    corpus: Sequence[DocumentRecord],
    trie_set: TrieSet,
    scorer_factory: ScorerFactory,
    variant: VariantConfig,
    config: DecodeConfig = DecodeConfig(),
    *,
    inventory: TargetInventory | None = None,
    external_memory: dict[tuple[str, int], MemoryEntry] | None = None,
    memory_capacity: int | None = None,
    workers: int = 1,
) -> tuple[list[PredictionRecord], CorpusLinkReport]:
    """Link every document; cross-document parallelism, per-document order.

    Output records are sorted by (doc_id, mention index), so the bytes written
    downstream do not depend on the worker count.
    """

    def run(doc: DocumentRecord) -> DocumentLinkResult:
        return link_document(
            doc,
            trie_set,
            scorer_factory,
            variant,
            config,
            inventory=inventory,
            external_memory=external_memory,
            memory_capacity=memory_capacity,
        )

    if workers <= 1 or len(corpus) <= 1:
        results = [run(doc) for doc in corpus]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, corpus))

    records: list[PredictionRecord] = []
    failures: list[tuple[str, int, str]] = []
    for res in results:
        records.extend(res.records)
        failures.extend((res.doc_id, t, msg) for t, msg in res.failures)
    records.sort(key=lambda r: (r.doc_id, r.mention_index))
    report = CorpusLinkReport(
        n_documents=len(corpus),
        n_mentions=sum(len(d.mentions) for d in corpus),
        failures=sorted(failures),
    )
    return records, report
