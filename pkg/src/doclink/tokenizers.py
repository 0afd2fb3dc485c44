"""Tokenizer contract and the default word/punctuation tokenizer.

Any object with ``encode``, ``decode``, ``vocab_size``, ``end_token``, and
``fingerprint()`` can drive trie construction and decoding, so a neural
tokenizer can substitute for the built-in one. The built-in tokenizer splits
text into word runs, whitespace runs, and single punctuation characters,
assigns ids to the pieces seen while fitting, and falls back to UTF-8 byte
tokens for anything unseen. Token id 0 is the reserved end-of-sequence token
and is never produced by ``encode``.
"""

from __future__ import annotations

import hashlib
import json
import re
from pathlib import Path
from typing import Protocol, Sequence, runtime_checkable

# Every character falls in exactly one class, so the pieces of a string
# concatenate back to the string itself.
_PIECE_RE = re.compile(r"\w+|\s+|[^\w\s]", re.UNICODE)

END_TOKEN = 0
_N_BYTE_TOKENS = 256
_FIRST_PIECE_ID = 1 + _N_BYTE_TOKENS


@runtime_checkable
class Tokenizer(Protocol):
    @property
    def vocab_size(self) -> int: ...

    @property
    def end_token(self) -> int: ...

    def encode(self, text: str) -> list[int]: ...

    def decode(self, ids: Sequence[int]) -> str: ...

    def fingerprint(self) -> str: ...


def split_pieces(text: str) -> list[str]:
    return _PIECE_RE.findall(text)


class WordPunctTokenizer:
    """Deterministic splitter tokenizer with UTF-8 byte fallback.

    Ids: 0 = end token, 1..256 = byte tokens, 257+ = fitted pieces in
    lexicographic order. ``decode(encode(s))`` reproduces any string exactly,
    fitted or not, because unknown pieces round-trip through their bytes.
    """

    shareable = True

    def __init__(self, pieces: Sequence[str]):
        self._pieces = sorted(set(pieces))
        self._piece_to_id = {
            p: _FIRST_PIECE_ID + i for i, p in enumerate(self._pieces)
        }

    @classmethod
    def fit(cls, texts: Sequence[str]) -> "WordPunctTokenizer":
        pieces: set[str] = set()
        for text in texts:
            pieces.update(split_pieces(text))
        return cls(sorted(pieces))

    @property
    def vocab_size(self) -> int:
        return _FIRST_PIECE_ID + len(self._pieces)

    @property
    def end_token(self) -> int:
        return END_TOKEN

    def encode(self, text: str) -> list[int]:
        ids: list[int] = []
        for piece in split_pieces(text):
            pid = self._piece_to_id.get(piece)
            if pid is not None:
                ids.append(pid)
            else:
                ids.extend(1 + b for b in piece.encode("utf-8"))
        return ids

    def decode(self, ids: Sequence[int]) -> str:
        out: list[str] = []
        byte_buf = bytearray()
        for tok in ids:
            if tok == END_TOKEN:
                continue
            if 1 <= tok <= _N_BYTE_TOKENS:
                byte_buf.append(tok - 1)
                continue
            if byte_buf:
                out.append(byte_buf.decode("utf-8"))
                byte_buf.clear()
            idx = tok - _FIRST_PIECE_ID
            if idx < 0 or idx >= len(self._pieces):
                raise ValueError(f"token id {tok} outside vocabulary")
            out.append(self._pieces[idx])
        if byte_buf:
            out.append(byte_buf.decode("utf-8"))
        return "".join(out)

    def token_text(self, tok: int) -> str:
        """Surface text of one token id (byte tokens render as their byte)."""
        return self.decode([tok])

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(b"wordpunct-v1\x00")
        for piece in self._pieces:
            h.update(piece.encode("utf-8"))
            h.update(b"\x00")
        return h.hexdigest()

    def save(self, path: str | Path) -> None:
        payload = {"format": "wordpunct-tokenizer", "version": 1, "pieces": self._pieces}
        Path(path).write_text(
            json.dumps(payload, ensure_ascii=False), encoding="utf-8"
        )

    @classmethod
    def load(cls, path: str | Path) -> "WordPunctTokenizer":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        if payload.get("format") != "wordpunct-tokenizer" or payload.get("version") != 1:
            raise ValueError(f"{path}: not a version-1 tokenizer file")
        return cls(payload["pieces"])
