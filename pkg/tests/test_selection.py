from __future__ import annotations

import math
import random

import pytest

from oracles import greedy_selection
from posterkit.document import SectionNode, SectionTree
from posterkit.graph import ContributionGraph, ImportanceScores
from posterkit.segmentation import Segment
from posterkit.selection import (SelectionConfig, SelectionResult, select_diverse,
                                 lca_depth, selection_score)


def tree_fixture() -> SectionTree:
    # root -> {Intro -> {A}, Method -> {B, C}}
    nodes = {
        0: SectionNode(0, "root", 0, (1, 2)),
        1: SectionNode(1, "Intro", 1, (3,)),
        2: SectionNode(2, "Method", 1, (4, 5)),
        3: SectionNode(3, "A", 2, ()),
        4: SectionNode(4, "B", 2, ()),
        5: SectionNode(5, "C", 2, ()),
    }
    parents = {1: 0, 2: 0, 3: 1, 4: 2, 5: 2}
    return SectionTree(0, nodes, parents)


def seg(i, home):
    return Segment(i, (i,), f"segment {i}", home)


def test_lca_same_leaf():
    tree = tree_fixture()
    assert lca_depth(tree, seg(0, 4), seg(1, 4)) == 2


def test_lca_different_top_level():
    tree = tree_fixture()
    assert lca_depth(tree, seg(0, 3), seg(1, 4)) == 0


def test_lca_sibling_leaves():
    tree = tree_fixture()
    # Segments under Method/B and Method/C meet at Method (depth 1).
    assert lca_depth(tree, seg(0, 4), seg(1, 5)) == 1


def test_lca_self_is_own_depth():
    tree = tree_fixture()
    s = seg(0, 5)
    assert lca_depth(tree, s, s) == 2


def test_selection_score_empty_selected():
    tree = tree_fixture()
    assert selection_score(0.42, [], seg(0, 4), 0.7, tree) == 0.42


def test_selection_score_single_neighbor():
    tree = tree_fixture()
    # One selected segment at LCA depth 1: score = 0.2 * 0.7.
    got = selection_score(0.2, [seg(1, 5)], seg(0, 4), 0.7, tree)
    assert got == pytest.approx(0.14, abs=1e-12)


def test_selection_score_two_selected_hand_value():
    tree = tree_fixture()
    # LCA depths {0, 2} at lam 0.5: 0.4 * (1 + 0.25) / 2 = 0.25.
    selected = [seg(1, 3), seg(2, 4)]
    got = selection_score(0.4, selected, seg(0, 4), 0.5, tree)
    assert got == pytest.approx(0.25, abs=1e-12)


def flat_tree(n_sections: int) -> SectionTree:
    nodes = {0: SectionNode(0, "root", 0, tuple(range(1, n_sections + 1)))}
    parents = {}
    for s in range(1, n_sections + 1):
        nodes[s] = SectionNode(s, f"S{s}", 1, ())
        parents[s] = 0
    return SectionTree(0, nodes, parents)


def run_selection(scores, homes, gamma=0.5, lam=0.7, tree=None):
    n = len(scores)
    tree = tree or flat_tree(max(homes))
    segments = [seg(i, homes[i]) for i in range(n)]
    graph = ContributionGraph(n, {})
    imp = ImportanceScores(tuple(scores), True, 1)
    return select_diverse(graph, imp, segments, tree, SelectionConfig(gamma=gamma, lam=lam))


def test_budget_is_ceiling():
    result = run_selection([0.1] * 7, [1] * 7, gamma=0.5)
    assert len(result.selected) == 4  # ceil(3.5)


def test_first_pick_is_raw_argmax():
    result = run_selection([0.1, 0.5, 0.2, 0.15], [1, 1, 2, 2], gamma=0.25)
    assert result.selected[0] == 1


def test_tie_breaks_to_lowest_id():
    result = run_selection([0.25, 0.25, 0.25, 0.25], [1, 1, 2, 2], gamma=0.5)
    assert result.selected[0] == 0
    # Second round: candidates 1 (same section, factor lam) loses to
    # candidates 2/3 (different section, factor lam^0 = 1); tie -> id 2.
    assert result.selected[1] == 2


def test_four_segment_fixture_matches_oracle():
    tree = flat_tree(2)
    scores = [0.4, 0.3, 0.2, 0.1]
    homes = [1, 1, 2, 2]
    result = run_selection(scores, homes, gamma=0.75, lam=0.5, tree=tree)
    paths = [(0, h) for h in homes]
    expected = greedy_selection(4, scores, paths, gamma=0.75, lam=0.5)
    assert list(result.selected) == expected
    # Diversity pressure: after picking 0 (section 1), section-2 segment
    # 2 outranks the higher-raw-score segment 1.
    assert result.selected[:2] == (0, 2)


def test_scores_scale_invariance():
    scores = [0.12, 0.3, 0.18, 0.4, 0.1]
    homes = [1, 2, 1, 2, 3]
    base = run_selection(scores, homes, gamma=0.8)
    scaled = run_selection([s * 37.5 for s in scores], homes, gamma=0.8)
    assert base.selected == scaled.selected


def test_diversity_pressure_prefers_unrelated():
    # Two equal-score candidates, one sharing the selected segment's
    # section: the deeper-LCA (more related) one is never picked first.
    result = run_selection([0.5, 0.25, 0.25], [1, 1, 2], gamma=1.0)
    assert result.selected[0] == 0
    assert result.selected[1] == 2


def test_trace_shape_and_round_scores():
    result = run_selection([0.4, 0.3, 0.2], [1, 1, 2], gamma=1.0)
    assert isinstance(result, SelectionResult)
    assert len(result.scores_trace) == 3
    assert set(result.scores_trace[0]) == {0, 1, 2}
    assert set(result.scores_trace[1]) == {1, 2}
    # Each round's pick maximizes that round's scores.
    for pick, round_scores in zip(result.selected, result.scores_trace):
        assert round_scores[pick] == max(round_scores.values())


def random_tree(rng: random.Random):
    """Random 2-3 level section tree; returns (tree, leaf ids)."""
    n_top = rng.randint(1, 3)
    nodes = {0: SectionNode(0, "root", 0, ())}
    parents = {}
    leaves = []
    next_id = 1
    top_ids = []
    for _ in range(n_top):
        tid = next_id
        next_id += 1
        top_ids.append(tid)
        parents[tid] = 0
        kids = []
        for _ in range(rng.randint(0, 2)):
            kid = next_id
            next_id += 1
            parents[kid] = tid
            nodes[kid] = SectionNode(kid, f"n{kid}", 2, ())
            kids.append(kid)
            leaves.append(kid)
        nodes[tid] = SectionNode(tid, f"n{tid}", 1, tuple(kids))
        if not kids:
            leaves.append(tid)
    nodes[0] = SectionNode(0, "root", 0, tuple(top_ids))
    return SectionTree(0, nodes, parents), leaves


def test_random_instances_match_oracle():
    rng = random.Random(909)
    for trial in range(60):
        tree, leaves = random_tree(rng)
        n = rng.randint(1, 8)
        homes = [rng.choice(leaves) for _ in range(n)]
        scores = [rng.choice([0.1, 0.2, 0.2, 0.3, 0.4]) for _ in range(n)]
        total = sum(scores)
        scores = [s / total for s in scores]
        gamma = rng.choice([0.3, 0.5, 0.75, 1.0])
        lam = rng.choice([0.3, 0.5, 0.7, 0.9])
        segments = [seg(i, homes[i]) for i in range(n)]
        result = select_diverse(ContributionGraph(n, {}), ImportanceScores(tuple(scores), True, 1),
                      segments, tree, SelectionConfig(gamma=gamma, lam=lam))
        paths = [tuple(tree.path_from_root(h)) for h in homes]
        expected = greedy_selection(n, scores, paths, gamma, lam)
        assert list(result.selected) == expected, f"trial {trial}"
        assert len(result.selected) == math.ceil(gamma * n)


def test_config_validation():
    with pytest.raises(ValueError):
        SelectionConfig(gamma=0.0)
    with pytest.raises(ValueError):
        SelectionConfig(gamma=1.2)
    with pytest.raises(ValueError):
        SelectionConfig(lam=1.0)


def test_selection_dump(tmp_path):
    from posterkit.selection import write_selection

    result = run_selection([0.4, 0.6], [1, 2], gamma=1.0)
    write_selection(result, tmp_path / "sel.json")
    import json

    payload = json.loads((tmp_path / "sel.json").read_text())
    assert payload["selected"] == [1, 0]
    assert len(payload["rounds"]) == 2
