"""Pluggable token scoring: per-token log-probabilities and token counts.

The pipeline only ever talks to the :class:`Scorer` interface. The
bundled :class:`CharNGramScorer` is a deterministic character-level
add-k model so everything runs and is testable offline; a real language
model attaches through :mod:`posterkit.plugin` instead.

Reference tokenization is one token per Unicode character. All log
probabilities are natural logs.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from collections import Counter
from dataclasses import dataclass


class ScorerError(Exception):
    pass


class EmptyText(ScorerError):
    """Text tokenized to zero tokens where at least one is required."""


class EmptyCorpus(ScorerError):
    """Fit corpus contains no characters."""


class ScorerFailure(ScorerError):
    """A scorer plug-in failed or returned malformed output."""


class Scorer(ABC):
    """Scoring capability: log-probabilities conditioned on a context string.

    Implementations must be deterministic: identical ``(text, context)``
    always yields identical output. ``concurrent_safe`` declares whether
    the scorer tolerates concurrent calls; callers serialize otherwise.
    """

    concurrent_safe: bool = True

    @abstractmethod
    def token_logprobs(self, text: str, context: str = "") -> list[tuple[int, float]]:
        """(token id, ln P(token | context, preceding tokens)) per token of ``text``."""

    @abstractmethod
    def count_tokens(self, text: str) -> int:
        """Number of tokens in ``text``; 0 for the empty string."""


def perplexity(scorer: Scorer, text: str, context: str = "") -> float:
    """exp of the mean negative token log-likelihood of ``text`` given ``context``."""
    logprobs = scorer.token_logprobs(text, context)
    if not logprobs:
        raise EmptyText("perplexity requires at least one token")
    mean_ll = math.fsum(lp for _, lp in logprobs) / len(logprobs)
    return math.exp(-mean_ll)


def preceding_context(parts: list[str]) -> str:
    """Context string for text that follows ``parts`` in a document.

    Paragraph runs are newline-joined, so the context of the next
    paragraph is the joined run plus the trailing separator; empty
    ``parts`` means unconditional scoring.
    """
    if not parts:
        return ""
    return "\n".join(parts) + "\n"


class UniformScorer(Scorer):
    """Assigns P = 1/vocab_size to every character; context-free.

    Degenerate reference point: perplexity is exactly ``vocab_size`` for
    any non-empty text.
    """

    def __init__(self, vocab_size: int = 64):
        if vocab_size < 1:
            raise ValueError("vocab_size must be >= 1")
        self.vocab_size = vocab_size
        self._logprob = -math.log(vocab_size)

    def token_logprobs(self, text: str, context: str = "") -> list[tuple[int, float]]:
        return [(ord(ch), self._logprob) for ch in text]

    def count_tokens(self, text: str) -> int:
        return len(text)


class CharNGramScorer(Scorer):
    """Character n-gram model with add-k smoothing and unigram backoff.

    The vocabulary is every character seen at fit time plus one unknown
    symbol. Conditioning uses the last ``order - 1`` characters of
    ``context + scored prefix``; contexts that never continued anything
    at fit time (including prefixes shorter than ``order - 1``) back off
    to the smoothed unigram distribution, so every conditional stays a
    proper distribution.
    """

    def __init__(self, order: int, k: float, unigram_counts: Counter,
                 context_counts: dict[str, Counter], total_chars: int):
        if order < 1:
            raise ValueError("order must be >= 1")
        if k <= 0:
            raise ValueError("smoothing k must be > 0")
        self.order = order
        self.k = k
        self._unigrams = unigram_counts
        self._contexts = context_counts
        self._context_totals = {ctx: sum(c.values()) for ctx, c in context_counts.items()}
        self._total = total_chars
        # Stable token ids: sorted vocabulary, unknown symbol last.
        self._vocab = sorted(unigram_counts)
        self._ids = {ch: i for i, ch in enumerate(self._vocab)}
        self.unk_id = len(self._vocab)
        self.vocab_size = len(self._vocab) + 1  # + unknown

    def token_id(self, ch: str) -> int:
        return self._ids.get(ch, self.unk_id)

    def _unigram_logprob(self, ch: str) -> float:
        count = self._unigrams.get(ch, 0)
        return math.log(count + self.k) - math.log(self._total + self.k * self.vocab_size)

    def char_logprob(self, ch: str, preceding: str) -> float:
        """ln P(ch | preceding); ``preceding`` is the full prior string."""
        if self.order == 1:
            return self._unigram_logprob(ch)
        width = self.order - 1
        if len(preceding) < width:
            return self._unigram_logprob(ch)
        ctx = preceding[-width:]
        total = self._context_totals.get(ctx, 0)
        if total == 0:
            return self._unigram_logprob(ch)
        count = self._contexts[ctx].get(ch, 0)
        return math.log(count + self.k) - math.log(total + self.k * self.vocab_size)

    def token_logprobs(self, text: str, context: str = "") -> list[tuple[int, float]]:
        out = []
        preceding = context
        for ch in text:
            out.append((self.token_id(ch), self.char_logprob(ch, preceding)))
            preceding += ch
        return out

    def count_tokens(self, text: str) -> int:
        return len(text)

    def conditional_distribution(self, preceding: str) -> dict[str, float]:
        """P(· | preceding) over the full vocabulary (unknown symbol included)."""
        probs = {}
        for ch in self._vocab:
            probs[ch] = math.exp(self.char_logprob(ch, preceding))
        # Unknown symbol: zero observed count in any context.
        if self.order > 1 and len(preceding) >= self.order - 1 and \
                self._context_totals.get(preceding[-(self.order - 1):], 0) > 0:
            ctx = preceding[-(self.order - 1):]
            total = self._context_totals[ctx]
            probs["\x00UNK"] = self.k / (total + self.k * self.vocab_size)
        else:
            probs["\x00UNK"] = self.k / (self._total + self.k * self.vocab_size)
        return probs


def fit_ngram(corpus: list[str], order: int = 3, k: float = 1.0) -> CharNGramScorer:
    """Fit a :class:`CharNGramScorer` on the concatenation of ``corpus``.

    Only the concatenated character stream matters: n-grams are counted
    across document boundaries, so any corpus split with the same
    concatenation fits to the same model.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    if k <= 0:
        raise ValueError("smoothing k must be > 0")
    stream = "".join(corpus)
    if not stream:
        raise EmptyCorpus("fit requires at least one character")

    unigrams = Counter(stream)
    contexts: dict[str, Counter] = {}
    if order > 1:
        width = order - 1
        for i in range(width, len(stream)):
            ctx = stream[i - width:i]
            contexts.setdefault(ctx, Counter())[stream[i]] += 1
    return CharNGramScorer(order, k, unigrams, contexts, len(stream))


class CachingScorer(Scorer):
    """Memoizes ``token_logprobs`` by exact ``(text, context)`` pair.

    The contribution-matrix build reuses the unconditional score of each
    segment across every pairing, so this wrapper is mandatory there;
    plug-in scorers are expensive per call.
    """

    def __init__(self, inner: Scorer):
        self.inner = inner
        self.concurrent_safe = inner.concurrent_safe
        self._cache: dict[tuple[str, str], list[tuple[int, float]]] = {}
        self.hits = 0
        self.misses = 0

    def token_logprobs(self, text: str, context: str = "") -> list[tuple[int, float]]:
        key = (text, context)
        cached = self._cache.get(key)
        if cached is not None:
            self.hits += 1
            return cached
        self.misses += 1
        result = self.inner.token_logprobs(text, context)
        self._cache[key] = result
        return result

    def count_tokens(self, text: str) -> int:
        return self.inner.count_tokens(text)


@dataclass(frozen=True)
class VisualTokenEstimator:
    """Patch-grid visual token count for a rendered page; model-specific knobs."""

    patch_size: int = 28
    per_image_overhead: int = 0

    def __post_init__(self):
        if self.patch_size < 1:
            raise ValueError("patch_size must be >= 1")
        if self.per_image_overhead < 0:
            raise ValueError("per_image_overhead must be >= 0")

    def estimate(self, width: int, height: int) -> int:
        return math.ceil(width / self.patch_size) * math.ceil(height / self.patch_size) \
            + self.per_image_overhead
