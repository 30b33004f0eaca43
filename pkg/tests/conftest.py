from __future__ import annotations

import math
from pathlib import Path

import pytest

from posterkit.document import (Paragraph, ParsedDocument, SectionNode,
                                SectionTree, load_document)
from posterkit.scoring import Scorer

FIXTURES = Path(__file__).parent / "fixtures"


def make_document(texts: list[str], top_level: list[int] | None = None) -> ParsedDocument:
    """In-memory document: one top-level section per distinct index.

    ``top_level[i]`` names the top-level section (0-based) owning
    paragraph i; defaults to a single section for everything.
    """
    owners = top_level or [0] * len(texts)
    n_sections = max(owners) + 1
    nodes = {0: SectionNode(0, "root", 0, tuple(range(1, n_sections + 1)))}
    parents = {}
    for s in range(n_sections):
        nodes[s + 1] = SectionNode(s + 1, f"Section {s}", 1, ())
        parents[s + 1] = 0
    tree = SectionTree(0, nodes, parents)
    paragraphs = tuple(
        Paragraph(i, text, (0, owners[i] + 1)) for i, text in enumerate(texts)
    )
    return ParsedDocument(paragraphs, tree, ())


@pytest.fixture(scope="session")
def sample_doc_path() -> Path:
    return FIXTURES / "sample_document.json"


@pytest.fixture()
def sample_doc(sample_doc_path):
    return load_document(sample_doc_path)


class FixedProbScorer(Scorer):
    """Every token realized at one fixed probability; for arithmetic tests."""

    def __init__(self, prob: float):
        self._logprob = math.log(prob)

    def token_logprobs(self, text, context=""):
        return [(ord(ch), self._logprob) for ch in text]

    def count_tokens(self, text):
        return len(text)


@pytest.fixture()
def fixed_prob_scorer():
    return FixedProbScorer
