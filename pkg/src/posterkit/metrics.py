"""Evaluation metrics: entropy reduction, edit distance, classification.

``entropy`` implements the evaluation formula exactly as specified for
this toolkit: the sum of ``-p * ln p`` over the *realized* tokens, where
p is the scorer's probability of each token given everything before it.
That is not the usual surprisal sum, so :func:`cross_entropy` is kept
alongside as the standard yardstick.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .layout import Status
from .scoring import Scorer, preceding_context


class MetricError(Exception):
    pass


class DegenerateDenominator(MetricError):
    """Entropy normalization needs h_full > 0 and at least one token."""


class LengthMismatch(MetricError):
    pass


class UnknownLabel(MetricError):
    pass


def entropy(scorer: Scorer, text: str, context: str = "") -> float:
    """-sum(p_i * ln p_i) over realized token probabilities."""
    total = 0.0
    for _, logprob in scorer.token_logprobs(text, context):
        total -= math.exp(logprob) * logprob
    return total


def cross_entropy(scorer: Scorer, text: str, context: str = "") -> float:
    """Mean -ln p_i over realized tokens (standard per-token cross-entropy)."""
    logprobs = scorer.token_logprobs(text, context)
    if not logprobs:
        raise DegenerateDenominator("cross_entropy requires at least one token")
    return -sum(lp for _, lp in logprobs) / len(logprobs)


@dataclass(frozen=True)
class EntropyReport:
    h_full: float
    h_conditional: float
    selected_tokens: int
    delta_h_norm: float

    def to_dict(self) -> dict:
        return {
            "h_full": self.h_full,
            "h_conditional": self.h_conditional,
            "selected_tokens": self.selected_tokens,
            "delta_h_norm": self.delta_h_norm,
        }


def delta_h_norm(h_full: float, h_cond: float, selected_tokens: int) -> float:
    """Entropy reduction per selected token, relative to the full entropy."""
    if h_full <= 0 or selected_tokens <= 0:
        raise DegenerateDenominator(
            f"need h_full > 0 and selected_tokens > 0, got {h_full}, {selected_tokens}"
        )
    return (h_full - h_cond) / (h_full * selected_tokens)


def entropy_report(scorer: Scorer, document_text: str, selected_texts: list[str]) -> EntropyReport:
    """Full vs selected-conditioned entropy of a document."""
    h_full = entropy(scorer, document_text)
    context = preceding_context(selected_texts)
    h_cond = entropy(scorer, document_text, context)
    tokens = sum(scorer.count_tokens(t) for t in selected_texts)
    return EntropyReport(h_full, h_cond, tokens, delta_h_norm(h_full, h_cond, tokens))


def minmax_normalize(values: list[float]) -> list[float]:
    """Min-max scale a batch to [0, 1]; a constant batch maps to all zeros."""
    if not values:
        return []
    lo, hi = min(values), max(values)
    if hi == lo:
        return [0.0 for _ in values]
    return [(v - lo) / (hi - lo) for v in values]


def levenshtein(a: str, b: str) -> int:
    """Unit-cost insert/delete/substitute distance."""
    codes_a = np.array([ord(c) for c in a], dtype=np.int32)
    codes_b = np.array([ord(c) for c in b], dtype=np.int32)
    return _kernels.levenshtein_codes(codes_a, codes_b)


def normalized_edit_distance(a: str, b: str) -> float:
    """Levenshtein distance over the longer length; 0 for two empty strings."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 0.0
    return levenshtein(a, b) / longest


_LABELS = (Status.OVERFLOW, Status.SPARSE, Status.VALID)


@dataclass(frozen=True)
class ClassificationReport:
    """3-class confusion summary; rows are true labels, columns predictions."""

    labels: tuple[str, ...]
    confusion: tuple[tuple[int, ...], ...]
    accuracy: float
    precision: dict[str, float]
    recall: dict[str, float]
    f1: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "confusion": [list(row) for row in self.confusion],
            "accuracy": self.accuracy,
            "precision": dict(self.precision),
            "recall": dict(self.recall),
            "f1": dict(self.f1),
        }


def _as_status(value) -> Status:
    try:
        return Status(value)
    except ValueError:
        raise UnknownLabel(f"unknown label {value!r}") from None


def classification_report(predictions, labels) -> ClassificationReport:
    """Confusion matrix, accuracy, and per-class precision/recall/F1.

    F1 is defined as 0 when precision + recall is 0; same for the
    precision/recall of a class with no predicted/true instances.
    """
    preds = [_as_status(p) for p in predictions]
    truth = [_as_status(t) for t in labels]
    if len(preds) != len(truth):
        raise LengthMismatch(f"{len(preds)} predictions vs {len(truth)} labels")
    if not preds:
        raise LengthMismatch("empty input")

    index = {label: i for i, label in enumerate(_LABELS)}
    confusion = [[0, 0, 0] for _ in _LABELS]
    for t, p in zip(truth, preds):
        confusion[index[t]][index[p]] += 1

    total = len(truth)
    accuracy = sum(confusion[i][i] for i in range(3)) / total
    precision, recall, f1 = {}, {}, {}
    for label, i in index.items():
        predicted = sum(confusion[r][i] for r in range(3))
        actual = sum(confusion[i])
        p = confusion[i][i] / predicted if predicted else 0.0
        r = confusion[i][i] / actual if actual else 0.0
        precision[label.value] = p
        recall[label.value] = r
        f1[label.value] = 2 * p * r / (p + r) if (p + r) else 0.0

    return ClassificationReport(
        labels=tuple(l.value for l in _LABELS),
        confusion=tuple(tuple(row) for row in confusion),
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        f1=f1,
    )
