"""Constrained beam search over a token trie with pluggable scoring.

The decoder never proposes a token outside the trie's allowed set. Raw scores
from the scorer are treated as unnormalized log-weights and log-sum-exp
normalized over the allowed set at each step, so the accumulated beam score is
a sum of per-step log-probabilities under the constraint mask. Finished
hypotheses (those that consumed the end token) are frozen and compete by total
log-score divided by ``sequence_length ** length_penalty``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol, Sequence, runtime_checkable

from .textnorm import trigram_f1
from .tokenizers import Tokenizer
from .trie import TokenTrie

_LOG_EPS = 1e-6  # floor inside log() so lexical scores stay finite


class DecodeError(RuntimeError):
    pass


class DecodeExhaustedError(DecodeError):
    """No hypothesis reached the end token within the step cap."""


@runtime_checkable
class TokenScorer(Protocol):
    """Scores the allowed continuations of a generated prefix.

    ``score_step`` returns one finite log-weight per allowed token id, in the
    order given. Weights need not normalize; the decoder normalizes.
    """

    def score_step(
        self, prompt: str, prefix: Sequence[int], allowed: Sequence[int]
    ) -> list[float]: ...


@dataclass(frozen=True)
class DecodeConfig:
    beam_width: int = 5
    top_k: int = 5
    max_steps: int | None = None
    length_penalty: float = 0.0

    def __post_init__(self):
        if not (1 <= self.top_k <= self.beam_width):
            raise ValueError("top_k must satisfy 1 <= top_k <= beam_width")
        if self.max_steps is not None and self.max_steps < 1:
            raise ValueError("max_steps must be positive")


@dataclass(frozen=True)
class Candidate:
    concept_id: str
    target: str
    score: float
    tokens: tuple[int, ...] = field(repr=False, default=())


@dataclass
class RankedCandidates:
    items: list[Candidate]
    mention_ref: tuple[str, int] | None = None

    def concept_ids(self) -> list[str]:
        return [c.concept_id for c in self.items]


def _logsumexp(xs: list[float]) -> float:
    m = max(xs)
    return m + math.log(sum(math.exp(x - m) for x in xs))


def _adjusted(total: float, seq_len: int, length_penalty: float) -> float:
    if length_penalty == 0.0:
        return total
    return total / (seq_len ** length_penalty)


def decode(
    prompt: str,
    trie: TokenTrie,
    scorer: TokenScorer,
    config: DecodeConfig = DecodeConfig(),
) -> RankedCandidates:
    """Beam-search the trie, returning the top-k distinct concepts.

    Deterministic for identical inputs: ties break toward the higher score,
    then the shorter token sequence, then the lexicographically smaller
    target string.
    """
    max_steps = config.max_steps if config.max_steps is not None else trie.max_seq_len
    if max_steps < trie.max_seq_len:
        raise DecodeError(
            f"max_steps={max_steps} below longest inventory sequence "
            f"({trie.max_seq_len}) for group {trie.group!r}"
        )
    end = trie.end_token
    # Beams: (total normalized log-score, token tuple).
    active: list[tuple[float, tuple[int, ...]]] = [(0.0, ())]
    finished: list[tuple[float, float, tuple[int, ...]]] = []  # (adjusted, total, toks)

    for _ in range(max_steps):
        if not active:
            break
        expansions: list[tuple[float, tuple[int, ...]]] = []
        for total, toks in active:
            allowed = sorted(trie.allowed_continuations(toks))
            if not allowed:
                raise DecodeError("internal: reachable node with no continuations")
            raw = scorer.score_step(prompt, toks, allowed)
            _check_scores(raw, allowed)
            lse = _logsumexp(raw)
            for tok, score in zip(allowed, raw):
                step_logp = score - lse
                seq = toks + (tok,)
                new_total = total + step_logp
                if tok == end:
                    adj = _adjusted(new_total, len(seq), config.length_penalty)
                    finished.append((adj, new_total, seq))
                else:
                    expansions.append((new_total, seq))
        expansions.sort(key=lambda b: (-b[0], b[1]))
        active = expansions[: config.beam_width]
        finished.sort(key=lambda f: (-f[0], len(f[2]), f[2]))
        finished = finished[: config.beam_width]

    if not finished:
        raise DecodeExhaustedError(
            f"no hypothesis finished within {max_steps} steps"
        )

    # Deduplicate by concept (defensive: inventory guarantees one concept per
    # path, so this only matters if that invariant is violated upstream).
    best: dict[str, Candidate] = {}
    for adj, _total, seq in finished:
        concept_id, target = trie.resolve(seq)
        cand = Candidate(concept_id=concept_id, target=target, score=adj, tokens=seq)
        prior = best.get(concept_id)
        if prior is None or _rank_key(cand) < _rank_key(prior):
            best[concept_id] = cand
    ranked = sorted(best.values(), key=_rank_key)
    return RankedCandidates(items=ranked[: config.top_k])


def _rank_key(c: Candidate):
    return (-c.score, len(c.tokens), c.target)


def _check_scores(scores: list[float], allowed: list[int]) -> None:
    if len(scores) != len(allowed):
        raise DecodeError(
            f"scorer returned {len(scores)} scores for {len(allowed)} allowed tokens"
        )
    for s in scores:
        if not math.isfinite(s):
            raise DecodeError("scorer returned a non-finite log-score")


class UniformScorer:
    """Flat scorer: every allowed token gets log-weight 0."""

    shareable = True

    def score_step(self, prompt, prefix, allowed):
        return [0.0] * len(allowed)


class LexicalOverlapScorer:
    """Reference scorer ranking continuations by trigram overlap with a mention.

    Each allowed token t is scored ``log(F1(decode(prefix + [t]), mention) + 1e-6)``
    where F1 is the padded character-trigram multiset F1 (see textnorm.trigram_f1);
    the end token is scored by the F1 of the fully decoded string.
    """

    shareable = True

    def __init__(self, mention: str, tokenizer: Tokenizer):
        self.mention = mention
        self.tokenizer = tokenizer

    def score_step(self, prompt, prefix, allowed):
        scores = []
        for tok in allowed:
            if tok == self.tokenizer.end_token:
                text = self.tokenizer.decode(list(prefix))
            else:
                text = self.tokenizer.decode(list(prefix) + [tok])
            scores.append(math.log(trigram_f1(text, self.mention) + _LOG_EPS))
        return scores


class MemoryEchoScorer:
    """Wraps a base scorer, boosting steps that extend toward remembered targets.

    Test double making memory effects observable: every token (including the
    end token) whose extended prefix is a prefix of ``encode(target) + [end]``
    for some remembered target string gets ``boost`` added to its base
    log-weight before normalization.
    """

    shareable = True

    def __init__(
        self,
        base: TokenScorer,
        memory_targets: Sequence[str],
        boost: float,
        tokenizer: Tokenizer,
    ):
        if boost < 0:
            raise ValueError("boost must be >= 0")
        self.base = base
        self.boost = boost
        self._prefixes: set[tuple[int, ...]] = set()
        for target in memory_targets:
            seq = tuple(tokenizer.encode(target)) + (tokenizer.end_token,)
            for i in range(1, len(seq) + 1):
                self._prefixes.add(seq[:i])

    def score_step(self, prompt, prefix, allowed):
        scores = self.base.score_step(prompt, prefix, allowed)
        if self.boost == 0.0 or not self._prefixes:
            return scores
        pre = tuple(prefix)
        return [
            s + self.boost if pre + (tok,) in self._prefixes else s
            for tok, s in zip(allowed, scores)
        ]
