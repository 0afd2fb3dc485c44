"""Text normalization and character-trigram utilities shared across the engine.

One normalization notion is used everywhere a string equality or similarity
decision is made: Unicode NFC, case folding, and internal whitespace collapse.
Trigram extraction pads with sentinel boundary characters so strings shorter
than three characters still produce features.
"""

from __future__ import annotations

import math
import unicodedata
from collections import Counter

# Boundary sentinels for trigram padding; control chars never occur in text.
_BOUNDARY_LEFT = "\x02"
_BOUNDARY_RIGHT = "\x03"


def normalize(text: str) -> str:
    """NFC-normalize, case-fold, and collapse runs of whitespace to one space."""
    folded = unicodedata.normalize("NFC", text).casefold()
    return " ".join(folded.split())


def nfc(text: str) -> str:
    """NFC normalization only; preserves case and spacing."""
    return unicodedata.normalize("NFC", text)


def trigrams(text: str) -> Counter:
    """Multiset of character trigrams of the normalized, boundary-padded string.

    The empty string yields no trigrams; a single character yields one.
    """
    norm = normalize(text)
    if not norm:
        return Counter()
    padded = _BOUNDARY_LEFT + norm + _BOUNDARY_RIGHT
    return Counter(padded[i : i + 3] for i in range(len(padded) - 2))


def trigram_f1(a: str, b: str) -> float:
    """Trigram overlap F1: 2*O / (|A| + |B|) with multiset overlap O.

    Returns 0.0 when either side has no trigrams.
    """
    ta, tb = trigrams(a), trigrams(b)
    total = sum(ta.values()) + sum(tb.values())
    if total == 0 or not ta or not tb:
        return 0.0
    overlap = sum((ta & tb).values())
    return 2.0 * overlap / total


def cosine(u: dict[str, float], v: dict[str, float]) -> float:
    """Cosine similarity between sparse vectors; 0.0 when either is empty."""
    if not u or not v:
        return 0.0
    if len(v) < len(u):
        u, v = v, u
    dot = sum(w * v[g] for g, w in u.items() if g in v)
    nu = math.sqrt(sum(w * w for w in u.values()))
    nv = math.sqrt(sum(w * w for w in v.values()))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return dot / (nu * nv)
