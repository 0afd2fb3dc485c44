"""Document-level entity linking over a knowledge base: per-group trie-
constrained beam decoding, sequential prediction memory, rank-fusion
ensembling, cross-validated memory dataset construction, and an evaluation
harness with bootstrap confidence intervals."""

from .decoding import (
    Candidate,
    DecodeConfig,
    LexicalOverlapScorer,
    MemoryEchoScorer,
    RankedCandidates,
    TokenScorer,
    UniformScorer,
    decode,
)
from .documents import DocumentRecord, MentionRecord, read_corpus, write_corpus
from .fusion import FusionConfig, ensemble_predictions, rrf_fuse
from .kb import (
    KnowledgeBase,
    TargetInventory,
    filter_unambiguous,
    load_kb,
    select_target,
    tfidf_similarity,
)
from .linker import (
    MemoryEntry,
    MemoryState,
    VariantConfig,
    assemble_input,
    link_corpus,
    link_document,
)
from .tokenizers import Tokenizer, WordPunctTokenizer
from .trie import TokenTrie, TrieSet, build_trie, load_trie, save_trie

__version__ = "0.1.0"

__all__ = [
    "Candidate",
    "DecodeConfig",
    "DocumentRecord",
    "FusionConfig",
    "KnowledgeBase",
    "LexicalOverlapScorer",
    "MemoryEchoScorer",
    "MemoryEntry",
    "MemoryState",
    "MentionRecord",
    "RankedCandidates",
    "TargetInventory",
    "TokenScorer",
    "TokenTrie",
    "Tokenizer",
    "TrieSet",
    "UniformScorer",
    "VariantConfig",
    "WordPunctTokenizer",
    "assemble_input",
    "build_trie",
    "decode",
    "ensemble_predictions",
    "filter_unambiguous",
    "link_corpus",
    "link_document",
    "load_kb",
    "load_trie",
    "read_corpus",
    "rrf_fuse",
    "save_trie",
    "select_target",
    "tfidf_similarity",
    "write_corpus",
]
