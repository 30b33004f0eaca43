"""Contribution matrix over segments, graph construction, reversed PageRank.

An entry ``X[i, j]`` is the relative perplexity reduction of segment j
when segment i is provided as context: how much knowing i helps predict
j. Edges keep entries above a sparsity threshold. Importance scores are
PageRank run on the edge-reversed graph, so segments that contribute to
many important segments rank high.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .scoring import CachingScorer, Scorer, perplexity
from .segmentation import Segment


@dataclass(frozen=True)
class ContributionMatrix:
    """n x n non-negative matrix with a zero diagonal."""

    values: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class ContributionGraph:
    """Directed graph: edge (i, j) present iff X[i, j] > beta (strict)."""

    n: int
    weights: dict[tuple[int, int], float]

    @property
    def edges(self) -> set[tuple[int, int]]:
        return set(self.weights)

    def out_neighbors(self, i: int) -> list[int]:
        return [j for (a, j) in self.weights if a == i]

    def in_degree(self, j: int) -> int:
        return sum(1 for (_, b) in self.weights if b == j)


@dataclass(frozen=True)
class PageRankConfig:
    damping: float = 0.85
    tolerance: float = 1e-9
    max_iterations: int = 200

    def __post_init__(self):
        if not 0.0 < self.damping < 1.0:
            raise ValueError("damping must be in (0, 1)")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be > 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass(frozen=True)
class ImportanceScores:
    """Per-segment PageRank scores, normalized to sum 1.

    ``converged`` is False when iteration stopped at max_iterations; the
    last iterate is still returned.
    """

    scores: tuple[float, ...]
    converged: bool
    iterations: int


def contribution_matrix(segments: list[Segment], scorer: Scorer) -> ContributionMatrix:
    """Pairwise relative perplexity reduction, clamped at zero.

    Needs one unconditional and n*(n-1) conditional scores; the scorer
    is wrapped in a cache because the unconditional score of each
    segment is reused across every pairing.
    """
    if not segments:
        raise ValueError("contribution_matrix requires at least one segment")
    cached = scorer if isinstance(scorer, CachingScorer) else CachingScorer(scorer)
    n = len(segments)
    unconditional = [perplexity(cached, seg.text, "") for seg in segments]
    values = np.zeros((n, n), dtype=np.float64)
    for i, ctx_seg in enumerate(segments):
        for j, seg in enumerate(segments):
            if i == j:
                continue
            conditional = perplexity(cached, seg.text, ctx_seg.text)
            values[i, j] = max(0.0, (unconditional[j] - conditional) / unconditional[j])
    return ContributionMatrix(values)


def build_graph(matrix: ContributionMatrix, beta: float) -> ContributionGraph:
    """Keep entries strictly above ``beta`` as directed edges."""
    if beta < 0:
        raise ValueError("beta must be >= 0")
    values = matrix.values
    weights = {}
    for i in range(matrix.n):
        for j in range(matrix.n):
            if i != j and values[i, j] > beta:
                weights[(i, j)] = float(values[i, j])
    return ContributionGraph(matrix.n, weights)


def pagerank_reversed(graph: ContributionGraph, cfg: PageRankConfig = PageRankConfig()) -> ImportanceScores:
    """Power iteration of the reversed-graph PageRank recurrence.

    Each node gathers ``R(j) / in_degree(j)`` from the nodes it points
    to in the original graph, which is exactly standard PageRank on the
    edge-reversed graph. Nodes with no incoming contribution (dangling
    in the reversed graph) spread their mass uniformly each iteration,
    the usual stochastic completion. Scores are renormalized to sum 1.
    """
    n = graph.n
    if n < 1:
        raise ValueError("pagerank requires n >= 1")
    d = cfg.damping
    if graph.weights:
        src = np.array([i for (i, _) in graph.weights], dtype=np.int64)
        dst = np.array([j for (_, j) in graph.weights], dtype=np.int64)
    else:
        src = dst = np.empty(0, dtype=np.int64)
    in_degree = np.zeros(n, dtype=np.float64)
    np.add.at(in_degree, dst, 1.0)
    dangling = in_degree == 0.0  # nothing contributes to these nodes

    rank = np.full(n, 1.0 / n, dtype=np.float64)
    converged = False
    iterations = 0
    for iterations in range(1, cfg.max_iterations + 1):
        gathered = np.zeros(n, dtype=np.float64)
        if src.size:
            np.add.at(gathered, src, rank[dst] / in_degree[dst])
        dangling_mass = rank[dangling].sum()
        new_rank = (1.0 - d) / n + d * (gathered + dangling_mass / n)
        if np.abs(new_rank - rank).sum() < cfg.tolerance:
            rank = new_rank
            converged = True
            break
        rank = new_rank
    rank = rank / rank.sum()
    return ImportanceScores(tuple(float(r) for r in rank), converged, iterations)


def write_edgelist(graph: ContributionGraph, path: str | Path) -> None:
    """Edge-list text dump, one ``i j weight`` triple per line."""
    lines = [f"{i} {j} {w:.12g}" for (i, j), w in sorted(graph.weights.items())]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def write_scores(scores: ImportanceScores, path: str | Path) -> None:
    payload = {
        "scores": list(scores.scores),
        "converged": scores.converged,
        "iterations": scores.iterations,
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
