"""Diversity-aware greedy segment selection.

Each round rescores every unselected segment: its importance score
multiplied by the mean of ``lam ** lca_depth(candidate, already
selected)``. Deep common ancestors mean closely related sections, so
the factor shrinks fastest for candidates near what is already picked,
pushing the selection to spread across the section tree. The budget is
``ceil(gamma * n)`` segments.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .document import SectionTree
from .graph import ContributionGraph, ImportanceScores
from .segmentation import Segment


@dataclass(frozen=True)
class SelectionConfig:
    gamma: float = 0.5
    lam: float = 0.7

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must be in (0, 1]")
        if not 0.0 < self.lam < 1.0:
            raise ValueError("lam must be in (0, 1)")


@dataclass(frozen=True)
class SelectionResult:
    """Selected segment ids in pick order plus per-round candidate scores."""

    selected: tuple[int, ...]
    scores_trace: tuple[dict[int, float], ...]

    def to_dict(self) -> dict:
        return {
            "selected": list(self.selected),
            "rounds": [
                {"candidate_scores": {str(k): v for k, v in round_scores.items()}}
                for round_scores in self.scores_trace
            ],
        }


def lca_depth(tree: SectionTree, a: Segment, b: Segment) -> int:
    """Depth of the lowest common ancestor of two segments' home sections.

    Root depth is 0; two segments sharing a home section meet at that
    section's own depth.
    """
    path_a = tree.path_from_root(a.home_section)
    path_b = tree.path_from_root(b.home_section)
    depth = -1
    for pa, pb in zip(path_a, path_b):
        if pa != pb:
            break
        depth += 1
    return depth


def selection_score(importance: float, selected: list[Segment], candidate: Segment,
                    lam: float, tree: SectionTree) -> float:
    """Importance damped by mean relatedness to the selected set."""
    if not selected:
        return importance
    factor = sum(lam ** lca_depth(tree, candidate, seg) for seg in selected) / len(selected)
    return importance * factor


def select_diverse(graph: ContributionGraph, scores: ImportanceScores, segments: list[Segment],
         tree: SectionTree, cfg: SelectionConfig = SelectionConfig()) -> SelectionResult:
    """Greedy budgeted selection; argmax ties break to the lowest segment id."""
    n = len(segments)
    if n < 1:
        raise ValueError("select_diverse requires at least one segment")
    if graph.n != n or len(scores.scores) != n:
        raise ValueError("graph, scores, and segments disagree on n")
    by_id = {seg.id: seg for seg in segments}
    budget = math.ceil(cfg.gamma * n)

    selected: list[Segment] = []
    selected_ids: list[int] = []
    trace: list[dict[int, float]] = []
    while len(selected_ids) < budget:
        round_scores: dict[int, float] = {}
        for seg in segments:
            if seg.id in round_scores or seg.id in selected_ids:
                continue
            round_scores[seg.id] = selection_score(
                scores.scores[seg.id], selected, seg, cfg.lam, tree
            )
        best = min(round_scores, key=lambda sid: (-round_scores[sid], sid))
        selected_ids.append(best)
        selected.append(by_id[best])
        trace.append(round_scores)
    return SelectionResult(tuple(selected_ids), tuple(trace))


def write_selection(result: SelectionResult, path: str | Path) -> None:
    Path(path).write_text(json.dumps(result.to_dict(), indent=2) + "\n", encoding="utf-8")
