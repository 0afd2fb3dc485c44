"""Per-semantic-group token tries over the target inventory.

Every inventory string is inserted as ``encode(target) + [end_token]``; the
node reached through the end token is a terminal carrying exactly one
(concept id, target string) pair. Queries return the exact child-token set of
a node, so constrained decoding can only ever walk complete inventory strings.

Archive layout (little-endian, versioned; loaders reject unknown versions):

    magic          5 bytes  b"GTRIE"
    version        u16      currently 1
    group          u32 len + UTF-8 bytes
    fingerprint    u32 len + UTF-8 bytes (tokenizer fingerprint)
    end_token      u32      token id that closes every inserted sequence
    max_seq_len    u32      longest inserted token sequence (incl. end token)
    node_count     u32
    nodes          node_count records in depth-first order from the root:
        child_count  u32
        children     child_count * (token u32, node u32), sorted by token
        terminal     u8 (0|1)
        if terminal: concept_id u32 len + UTF-8, target u32 len + UTF-8
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .kb import TargetInventory
from .tokenizers import Tokenizer, WordPunctTokenizer

MAGIC = b"GTRIE"
FORMAT_VERSION = 1


class TrieBuildError(ValueError):
    """Two distinct inventory strings collapsed to one token sequence."""


class OffTrieError(KeyError):
    """Prefix does not correspond to a path from the root."""


class ResolutionError(KeyError):
    """Sequence does not end at a terminal node."""


class TrieArchiveError(ValueError):
    """Corrupt archive, unknown format version, or fingerprint mismatch."""


@dataclass
class TokenTrie:
    group: str
    tokenizer_fingerprint: str
    end_token: int = 0
    children: list[dict[int, int]] = field(default_factory=lambda: [{}])
    terminals: dict[int, tuple[str, str]] = field(default_factory=dict)
    max_seq_len: int = 0

    @property
    def node_count(self) -> int:
        return len(self.children)

    def _walk(self, prefix: Sequence[int]) -> int:
        node = 0
        for tok in prefix:
            nxt = self.children[node].get(tok)
            if nxt is None:
                raise OffTrieError(f"prefix leaves the trie at token {tok}")
            node = nxt
        return node

    def allowed_continuations(self, prefix: Sequence[int]) -> set[int]:
        """Child token ids of the node reached by prefix; end token iff terminal."""
        return set(self.children[self._walk(prefix)])

    def resolve(self, sequence: Sequence[int]) -> tuple[str, str]:
        """(concept id, target string) at the terminal reached by sequence."""
        node = self._walk(sequence)
        hit = self.terminals.get(node)
        if hit is None:
            raise ResolutionError("sequence does not end at a terminal node")
        return hit


def build_trie(
    inventory: TargetInventory, group: str, tokenizer: Tokenizer
) -> TokenTrie:
    """Build the group's trie from its inventory entries.

    Raises TrieBuildError when two distinct target strings encode to the same
    token sequence (the one-string-one-concept guarantee would break), and
    ValueError when the group has no entries.
    """
    entries = inventory.group_entries(group)
    if not entries:
        raise ValueError(f"no inventory entries for group {group!r}")
    end = tokenizer.end_token
    trie = TokenTrie(
        group=group,
        tokenizer_fingerprint=tokenizer.fingerprint(),
        end_token=end,
    )
    for target in sorted(entries):
        concept_id = entries[target]
        seq = tokenizer.encode(target)
        if end in seq:
            raise TrieBuildError(
                f"encode({target!r}) produced the reserved end token"
            )
        seq = seq + [end]
        node = 0
        for tok in seq:
            nxt = trie.children[node].get(tok)
            if nxt is None:
                trie.children.append({})
                nxt = len(trie.children) - 1
                trie.children[node][tok] = nxt
            node = nxt
        prior = trie.terminals.get(node)
        if prior is not None:
            raise TrieBuildError(
                f"targets {prior[1]!r} and {target!r} encode to the same "
                f"token sequence in group {group!r}"
            )
        trie.terminals[node] = (concept_id, target)
        trie.max_seq_len = max(trie.max_seq_len, len(seq))
    return trie


def iter_terminal_sequences(trie: TokenTrie) -> Iterable[tuple[list[int], str, str]]:
    """Yield (token sequence, concept id, target) for every terminal, DFS order."""
    stack: list[tuple[int, list[int]]] = [(0, [])]
    while stack:
        node, path = stack.pop()
        hit = trie.terminals.get(node)
        if hit is not None:
            yield path, hit[0], hit[1]
        for tok in sorted(trie.children[node], reverse=True):
            stack.append((trie.children[node][tok], path + [tok]))


def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TrieArchiveError("truncated trie archive")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def string(self) -> str:
        return self.take(self.u32()).decode("utf-8")


def save_trie(trie: TokenTrie, path: str | Path) -> None:
    # Depth-first numbering keeps the table independent of build insertion order.
    order: list[int] = []
    new_id: dict[int, int] = {}
    stack = [0]
    while stack:
        node = stack.pop()
        new_id[node] = len(order)
        order.append(node)
        for tok in sorted(trie.children[node], reverse=True):
            stack.append(trie.children[node][tok])

    out = bytearray()
    out += MAGIC
    out += struct.pack("<H", FORMAT_VERSION)
    out += _pack_str(trie.group)
    out += _pack_str(trie.tokenizer_fingerprint)
    out += struct.pack("<I", trie.end_token)
    out += struct.pack("<I", trie.max_seq_len)
    out += struct.pack("<I", len(order))
    for node in order:
        kids = trie.children[node]
        out += struct.pack("<I", len(kids))
        for tok in sorted(kids):
            out += struct.pack("<II", tok, new_id[kids[tok]])
        hit = trie.terminals.get(node)
        out += struct.pack("<B", 1 if hit else 0)
        if hit:
            out += _pack_str(hit[0])
            out += _pack_str(hit[1])
    Path(path).write_bytes(bytes(out))


def load_trie(path: str | Path, expected_fingerprint: str | None = None) -> TokenTrie:
    """Load a trie archive, rejecting unknown versions and fingerprint drift."""
    rd = _Reader(Path(path).read_bytes())
    if rd.take(5) != MAGIC:
        raise TrieArchiveError(f"{path}: not a trie archive")
    version = rd.u16()
    if version != FORMAT_VERSION:
        raise TrieArchiveError(
            f"{path}: unsupported trie archive version {version}"
        )
    group = rd.string()
    fingerprint = rd.string()
    if expected_fingerprint is not None and fingerprint != expected_fingerprint:
        raise TrieArchiveError(
            f"{path}: tokenizer fingerprint mismatch "
            f"(archive {fingerprint[:12]}…, expected {expected_fingerprint[:12]}…)"
        )
    end_token = rd.u32()
    max_seq_len = rd.u32()
    node_count = rd.u32()
    children: list[dict[int, int]] = []
    terminals: dict[int, tuple[str, str]] = {}
    for i in range(node_count):
        kids = {}
        for _ in range(rd.u32()):
            tok = rd.u32()
            child = rd.u32()
            kids[tok] = child
        children.append(kids)
        if rd.u8():
            terminals[i] = (rd.string(), rd.string())
    if rd.pos != len(rd.data):
        raise TrieArchiveError(f"{path}: trailing bytes in trie archive")
    return TokenTrie(
        group=group,
        tokenizer_fingerprint=fingerprint,
        end_token=end_token,
        children=children,
        terminals=terminals,
        max_seq_len=max_seq_len,
    )


@dataclass
class TrieSet:
    """All group tries built against one shared tokenizer."""

    tokenizer: Tokenizer
    tries: dict[str, TokenTrie]

    def fingerprint(self) -> str:
        return self.tokenizer.fingerprint()

    @classmethod
    def build(cls, inventory: TargetInventory, tokenizer: Tokenizer | None = None) -> "TrieSet":
        if tokenizer is None:
            tokenizer = WordPunctTokenizer.fit(
                sorted(target for _, target in inventory.entries)
            )
        tries = {
            group: build_trie(inventory, group, tokenizer)
            for group in inventory.groups()
        }
        return cls(tokenizer=tokenizer, tries=tries)

    def save(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        if not isinstance(self.tokenizer, WordPunctTokenizer):
            raise TrieArchiveError(
                "only the built-in tokenizer supports directory persistence"
            )
        self.tokenizer.save(directory / "tokenizer.json")
        names = {group: _safe_name(group) for group in self.tries}
        if len(set(names.values())) != len(names):
            raise TrieArchiveError("group names collide after filename sanitizing")
        for group, trie in self.tries.items():
            save_trie(trie, directory / f"{names[group]}.trie")

    @classmethod
    def load(cls, directory: str | Path) -> "TrieSet":
        directory = Path(directory)
        try:
            tokenizer = WordPunctTokenizer.load(directory / "tokenizer.json")
        except (ValueError, KeyError, FileNotFoundError) as exc:
            raise TrieArchiveError(f"{directory}: cannot load tokenizer: {exc}") from exc
        expected = tokenizer.fingerprint()
        tries = {}
        for archive in sorted(directory.glob("*.trie")):
            trie = load_trie(archive, expected_fingerprint=expected)
            tries[trie.group] = trie
        if not tries:
            raise TrieArchiveError(f"{directory}: no trie archives found")
        return cls(tokenizer=tokenizer, tries=tries)


def _safe_name(group: str) -> str:
    return "".join(c if c.isalnum() or c in "-_" else "_" for c in group)
