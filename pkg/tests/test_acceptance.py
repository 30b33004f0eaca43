"""Acceptance suite: one test per release criterion, stated tolerances.

Each test prints a ``ACCEPTANCE <n> ...: PASS`` line when it holds, so a
verbose run doubles as the acceptance report.
"""

from __future__ import annotations

import json
import math
import random
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from conftest import FixedProbScorer, make_document
from oracles import (dense_pagerank_reversed, greedy_selection,
                     levenshtein_table)
from posterkit.benchgen import generate_benchmark
from posterkit.cli import main as cli_main
from posterkit.document import SectionNode, SectionTree
from posterkit.graph import ContributionGraph, ImportanceScores, pagerank_reversed
from posterkit.layout import DetectorConfig, detect
from posterkit.metrics import (classification_report, delta_h_norm, entropy,
                               levenshtein)
from posterkit.render import TypesetConfig, compression_report, render_group
from posterkit.scoring import UniformScorer, VisualTokenEstimator, fit_ngram
from posterkit.segmentation import Segment, SegmentationConfig, segment
from posterkit.selection import SelectionConfig, select_diverse

DOC = str(Path(__file__).parent / "fixtures" / "sample_document.json")
BENCH_SEED = 20240707
DETECT_CFG = DetectorConfig(n_strips=512, tau_s=0.5)


@pytest.fixture(scope="module")
def benchmark_150(tmp_path_factory):
    out = tmp_path_factory.mktemp("layout_bench")
    manifest = generate_benchmark(seed=BENCH_SEED, per_class=50, out_dir=out)
    images = {
        e.image_path: np.asarray(Image.open(out / e.image_path).convert("RGB"))
        for e in manifest.entries
    }
    return manifest, images


def _evaluate(manifest, images, cfg):
    predictions = [
        detect(images[e.image_path], e.panel(), cfg).status
        for e in manifest.entries
    ]
    return classification_report(predictions, [e.label for e in manifest.entries])


def test_01_layout_benchmark_reproduction(benchmark_150):
    manifest, images = benchmark_150
    assert manifest.counts() == {"overflow": 50, "sparse": 50, "valid": 50}

    first = manifest.entries[0]
    detect(images[first.image_path], first.panel(), DETECT_CFG)  # warm the JIT

    start = time.perf_counter()
    report = _evaluate(manifest, images, DETECT_CFG)
    elapsed = time.perf_counter() - start

    assert report.accuracy >= 0.90, f"accuracy {report.accuracy:.3f}"
    assert report.f1["overflow"] >= 0.95, f"overflow F1 {report.f1['overflow']:.3f}"
    assert elapsed < 60.0, f"150-panel run took {elapsed:.1f}s"
    per_panel = elapsed / len(manifest.entries)
    assert per_panel <= 0.200, f"mean detect {per_panel * 1e3:.1f}ms"
    print(f"\nACCEPTANCE 1 layout benchmark: PASS "
          f"(accuracy={report.accuracy:.3f}, overflow_f1={report.f1['overflow']:.3f}, "
          f"{per_panel * 1e3:.0f}ms/panel, total {elapsed:.1f}s)")


def test_02_detector_parameter_ordering(benchmark_150):
    manifest, images = benchmark_150
    best = _evaluate(manifest, images, DetectorConfig(n_strips=512, tau_s=0.5)).accuracy
    mid = _evaluate(manifest, images, DetectorConfig(n_strips=256, tau_s=0.7)).accuracy
    fine = _evaluate(manifest, images, DetectorConfig(n_strips=1024, tau_s=0.7)).accuracy
    assert best > mid, f"{best:.3f} !> {mid:.3f}"
    assert best > fine, f"{best:.3f} !> {fine:.3f}"
    print(f"\nACCEPTANCE 2 parameter ordering: PASS "
          f"(512/0.5={best:.3f} > 256/0.7={mid:.3f}, > 1024/0.7={fine:.3f})")


def test_03_pagerank_oracle_equivalence():
    rng = random.Random(1729)
    start = time.perf_counter()
    for trial in range(200):
        n = rng.randint(1, 20)
        edges = {(i, j) for i in range(n) for j in range(n)
                 if i != j and rng.random() < 0.3}
        graph = ContributionGraph(n, {e: 1.0 for e in edges})
        got = pagerank_reversed(graph)
        expected = dense_pagerank_reversed(n, edges)
        linf = max(abs(a - b) for a, b in zip(got.scores, expected))
        assert linf < 1e-8, f"trial {trial}: L-inf {linf:.2e}"
        assert abs(sum(got.scores) - 1.0) <= 1e-9
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0, f"{elapsed:.2f}s"
    print(f"\nACCEPTANCE 3 PageRank oracle: PASS (200 graphs, {elapsed:.2f}s)")


def _random_tree(rng: random.Random):
    nodes = {0: SectionNode(0, "root", 0, ())}
    parents: dict[int, int] = {}
    leaves = []
    next_id = 1
    tops = []
    for _ in range(rng.randint(1, 3)):
        tid, next_id = next_id, next_id + 1
        parents[tid] = 0
        kids = []
        for _ in range(rng.randint(0, 2)):
            kid, next_id = next_id, next_id + 1
            parents[kid] = tid
            nodes[kid] = SectionNode(kid, f"n{kid}", 2, ())
            kids.append(kid)
            leaves.append(kid)
        nodes[tid] = SectionNode(tid, f"n{tid}", 1, tuple(kids))
        tops.append(tid)
        if not kids:
            leaves.append(tid)
    nodes[0] = SectionNode(0, "root", 0, tuple(tops))
    return SectionTree(0, nodes, parents), leaves


def test_04_selection_oracle_equivalence():
    rng = random.Random(4181)
    start = time.perf_counter()
    for trial in range(100):
        tree, leaves = _random_tree(rng)
        n = rng.randint(1, 8)
        homes = [rng.choice(leaves) for _ in range(n)]
        raw = [rng.choice([1, 2, 2, 3, 5]) for _ in range(n)]
        scores = tuple(v / sum(raw) for v in raw)
        gamma = rng.choice([0.3, 0.5, 0.7, 1.0])
        lam = rng.choice([0.3, 0.5, 0.7, 0.9])
        segments = [Segment(i, (i,), f"s{i}", homes[i]) for i in range(n)]
        got = select_diverse(ContributionGraph(n, {}), ImportanceScores(scores, True, 1),
                   segments, tree, SelectionConfig(gamma=gamma, lam=lam))
        expected = greedy_selection(
            n, list(scores), [tuple(tree.path_from_root(h)) for h in homes], gamma, lam)
        assert list(got.selected) == expected, f"trial {trial}"
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0, f"{elapsed:.2f}s"
    print(f"\nACCEPTANCE 4 diversity selection oracle: PASS (100 instances, {elapsed:.2f}s)")


def test_05_segmentation_boundaries():
    uniform_doc = make_document(["alpha one", "beta two", "gamma three", "delta four"])
    segs = segment(uniform_doc, UniformScorer(32), SegmentationConfig(alpha=1.0))
    assert len(segs) == 1

    shift_texts = [
        "alpha beta gamma delta alpha beta gamma",
        "beta gamma alpha delta beta gamma alpha",
        "gamma alpha beta delta gamma alpha beta",
        "delta alpha beta gamma delta alpha beta",
        "zulu xray yankee whiskey zulu xray yankee",
        "xray yankee zulu whiskey xray yankee zulu",
    ]
    doc = make_document(shift_texts)
    scorer = fit_ngram([doc.full_text], order=3, k=1.0)
    segs = segment(doc, scorer, SegmentationConfig(alpha=0.5))
    assert [s.paragraph_ids[0] for s in segs] == [0, 4], "planted boundary missed"

    rng = random.Random(618)
    alphabet = "abcdefg "
    for trial in range(500):
        texts = ["".join(rng.choice(alphabet) for _ in range(rng.randint(3, 20))).strip() or "pad"
                 for _ in range(rng.randint(1, 7))]
        rdoc = make_document(texts)
        rscorer = fit_ngram([rdoc.full_text], order=2, k=1.0)
        rsegs = segment(rdoc, rscorer, SegmentationConfig(alpha=rng.random() * 2))
        covered = [pid for s in rsegs for pid in s.paragraph_ids]
        assert covered == list(range(len(texts))), f"trial {trial}: not a partition"
    print("\nACCEPTANCE 5 segmentation boundaries: PASS "
          "(uniform=1 segment, planted boundary at 4, 500 partitions)")


def test_06_compression_accounting():
    rng = random.Random(271828)
    est = VisualTokenEstimator(patch_size=1)
    page = render_group([Segment(0, (0,), "x", 1)], TypesetConfig())[0]
    for _ in range(100):
        n_text = rng.randint(1, 10_000)
        page.width, page.height = rng.randint(1, 90), rng.randint(1, 90)
        report = compression_report(
            [Segment(0, (0,), "y" * n_text, 1)], [page], UniformScorer(2), est)
        assert report.rho == 1 - 1 / report.cr, "rho != 1 - 1/cr exactly"

    words = ["selection", "budget", "render", "tokens", "panel", "margin"]
    text = " ".join(words[i % len(words)] for i in range(320))[:2000]
    assert len(text) == 2000
    seg2000 = Segment(0, (0,), text, 1)
    page_counts = set()
    for dpi in (24, 48, 96, 144, 192):
        cfg = TypesetConfig(dpi=dpi)
        pages = render_group([seg2000], cfg)
        page_counts.add(len(pages))
        for p in pages:
            assert (p.width, p.height) == (round(595 * dpi / 72), round(842 * dpi / 72))
    assert len(page_counts) == 1, f"page counts differ across DPI: {page_counts}"
    print("\nACCEPTANCE 6 compression accounting: PASS "
          "(identity exact on 100 pairs, DPI sweep layout-invariant)")


def test_07_edit_distance():
    assert levenshtein("kitten", "sitting") == 3
    rng = random.Random(31415)
    pairs = []
    for _ in range(1000):
        a = "".join(rng.choice("abcde") for _ in range(rng.randint(0, 30)))
        b = "".join(rng.choice("abcde") for _ in range(rng.randint(0, 30)))
        pairs.append((a, b))
        assert levenshtein(a, b) == levenshtein_table(a, b)
    sample = pairs[:15]
    for a, b in sample:
        assert levenshtein(a, b) == levenshtein(b, a)
        assert (levenshtein(a, b) == 0) == (a == b)
        for c, _ in sample:
            assert levenshtein(a, b) <= levenshtein(a, c) + levenshtein(c, b)
    print("\nACCEPTANCE 7 edit distance: PASS (1000 DP-oracle pairs, metric axioms)")


def test_08_rendering_determinism(tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    for out in (out_a, out_b):
        rc = cli_main(["pipeline", "--input", DOC, "--out-dir", str(out), "--verify"])
        assert rc == 0
    files_a = sorted(p.name for p in out_a.iterdir())
    files_b = sorted(p.name for p in out_b.iterdir())
    assert files_a == files_b
    for name in files_a:
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name
    assert any(name.endswith(".png") for name in files_a)
    print(f"\nACCEPTANCE 8 rendering determinism: PASS ({len(files_a)} identical artifacts)")


def test_09_entropy_metric():
    assert delta_h_norm(10.0, 6.0, 8) == 0.05
    assert entropy(FixedProbScorer(1.0), "abc") == 0.0
    print("\nACCEPTANCE 9 entropy metric: PASS (toy delta exact, certain-token entropy 0)")


def test_10_end_to_end_smoke(tmp_path):
    out = tmp_path / "pipeline"
    proc = subprocess.run(
        [sys.executable, "-m", "posterkit.cli", "pipeline", "--input", DOC,
         "--out-dir", str(out), "--verify"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr

    segments = json.loads((out / "segments.json").read_text())["segments"]
    selection = json.loads((out / "selection.json").read_text())["selected"]
    assert len(selection) == math.ceil(0.5 * len(segments))

    manifest = json.loads((out / "render_manifest.json").read_text())
    assert len(manifest["pages"]) >= 1
    verify = manifest["verify"]
    assert verify["all_valid"] is True
    assert all(g["rounds_used"] <= 3 for g in verify["groups"])
    assert all(p["status"] == "valid" for g in verify["groups"] for p in g["pages"])
    print(f"\nACCEPTANCE 10 end-to-end smoke: PASS "
          f"({len(segments)} segments -> {len(selection)} selected, "
          f"{len(manifest['pages'])} pages, all panels valid)")
