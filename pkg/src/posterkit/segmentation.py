"""Perplexity-jump segmentation of the paragraph sequence.

A paragraph opens a new segment when its perplexity, conditioned on the
paragraphs already in the current segment, jumps above the previous
paragraph's by more than ``alpha * sigma``. ``sigma`` comes from a
boundary-free pre-pass with full-prefix conditioning: the threshold
definition is otherwise circular, because within-segment perplexities
depend on the boundaries being chosen. The pre-pass costs one extra
linear sweep and keeps the whole procedure deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .document import ParsedDocument, top_level_section_of
from .scoring import Scorer, perplexity, preceding_context


@dataclass(frozen=True)
class SegmentationConfig:
    """alpha: boundary sensitivity; larger means fewer boundaries.

    ``max_context_chars`` caps the conditioning context passed to the
    scorer (real plug-ins have context windows); None means unlimited,
    which keeps the reference scorer exact.
    """

    alpha: float = 1.0
    min_segment_paragraphs: int = 1
    max_context_chars: int | None = None

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.min_segment_paragraphs < 1:
            raise ValueError("min_segment_paragraphs must be >= 1")
        if self.max_context_chars is not None and self.max_context_chars < 0:
            raise ValueError("max_context_chars must be >= 0 or None")


@dataclass(frozen=True)
class BoundaryStats:
    prepass_ppl: tuple[float, ...]
    sigma: float


@dataclass(frozen=True)
class Segment:
    """Contiguous run of paragraphs; node unit of the contribution graph.

    ``home_section`` is the top-level section of the segment's first
    paragraph (a segment may straddle section boundaries).
    """

    id: int
    paragraph_ids: tuple[int, ...]
    text: str
    home_section: int


def _capped(context: str, cfg: SegmentationConfig) -> str:
    if cfg.max_context_chars is None:
        return context
    return context[-cfg.max_context_chars:] if cfg.max_context_chars else ""


def prepass(doc: ParsedDocument, scorer: Scorer) -> BoundaryStats:
    """Full-prefix perplexity of every paragraph plus the jump deviation.

    ``sigma`` is the population standard deviation of consecutive
    perplexity differences; zero when there are fewer than two
    paragraphs.
    """
    ppl = []
    texts = [p.text for p in doc.paragraphs]
    for i, text in enumerate(texts):
        ppl.append(perplexity(scorer, text, preceding_context(texts[:i])))
    if len(ppl) < 2:
        return BoundaryStats(tuple(ppl), 0.0)
    diffs = [b - a for a, b in zip(ppl, ppl[1:])]
    mean = sum(diffs) / len(diffs)
    sigma = math.sqrt(sum((d - mean) ** 2 for d in diffs) / len(diffs))
    return BoundaryStats(tuple(ppl), sigma)


def segment(doc: ParsedDocument, scorer: Scorer,
            cfg: SegmentationConfig = SegmentationConfig()) -> list[Segment]:
    """Partition the document into segments via the greedy boundary test.

    Left-to-right pass with within-segment conditioning: the current
    segment's paragraphs are the only context, and conditioning resets
    whenever a boundary opens. The first paragraph of a segment never
    triggers the test (strict inequality, so a zero threshold with flat
    perplexities still yields a single segment).
    """
    texts = [p.text for p in doc.paragraphs]
    if not texts:
        return []
    sigma = prepass(doc, scorer).sigma
    threshold = cfg.alpha * sigma

    boundaries = [0]
    seg_start = 0
    prev_ppl = perplexity(scorer, texts[0], "")
    for i in range(1, len(texts)):
        context = _capped(preceding_context(texts[seg_start:i]), cfg)
        cur_ppl = perplexity(scorer, texts[i], context)
        # Strictly greater beyond float noise: a context-free scorer must
        # yield exactly one segment even though its equal perplexities
        # accumulate ulp-level differences in the log mean.
        guard = 1e-12 * max(1.0, abs(cur_ppl), abs(prev_ppl))
        opened = (i - seg_start) >= cfg.min_segment_paragraphs \
            and cur_ppl - prev_ppl > threshold + guard
        if opened:
            boundaries.append(i)
            seg_start = i
            # Conditioning resets: the boundary paragraph starts its segment
            # unconditioned, and later tests compare against that value.
            cur_ppl = perplexity(scorer, texts[i], "")
        prev_ppl = cur_ppl

    segments = []
    bounds = boundaries + [len(texts)]
    for seg_id, (start, stop) in enumerate(zip(bounds, bounds[1:])):
        ids = tuple(range(start, stop))
        segments.append(
            Segment(
                id=seg_id,
                paragraph_ids=ids,
                text="\n".join(texts[start:stop]),
                home_section=top_level_section_of(doc, start),
            )
        )
    return segments
