from __future__ import annotations

import json

import jsonschema
import pytest

from posterkit.document import (DanglingSectionRef, EmptyDocument,
                                MalformedDocument, PanelPlan, UnknownParagraph,
                                load_document, serialize, top_level_section_of)

from pathlib import Path

SCHEMA = json.loads((Path(__file__).parents[1] / "docs"
                     / "input_document.schema.json").read_text())


def write_doc(tmp_path, payload, name="doc.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


def minimal_doc(text="hello world"):
    return {
        "paragraphs": [{"id": 0, "text": text, "section_path": [0, 1]}],
        "sections": [
            {"id": 0, "title": "root", "parent_id": None},
            {"id": 1, "title": "Body", "parent_id": 0},
        ],
        "media": [],
    }


def test_minimal_document(tmp_path):
    doc = load_document(write_doc(tmp_path, minimal_doc()))
    assert len(doc.paragraphs) == 1
    assert doc.tree.depth(1) == 1
    assert doc.paragraphs[0].text == "hello world"


def test_dangling_section_ref(tmp_path):
    payload = minimal_doc()
    payload["paragraphs"][0]["section_path"] = [0, 99]
    with pytest.raises(DanglingSectionRef):
        load_document(write_doc(tmp_path, payload))


def test_sample_fixture_structure(sample_doc_path, sample_doc):
    # Fixture is schema-valid and has 3 top-level sections, ids 0..11.
    jsonschema.validate(json.loads(sample_doc_path.read_text()), SCHEMA)
    assert len(sample_doc.paragraphs) == 12
    assert [p.id for p in sample_doc.paragraphs] == list(range(12))
    root = sample_doc.tree.nodes[sample_doc.tree.root_id]
    assert len(root.children) == 3


def test_example_doc_matches_fixture(sample_doc_path):
    example = Path(__file__).parents[1] / "docs" / "example_document.json"
    assert json.loads(example.read_text()) == json.loads(sample_doc_path.read_text())


def test_top_level_section(sample_doc):
    # Paragraph 7 lives under Results/Ablation; its top-level section is Results.
    assert top_level_section_of(sample_doc, 7) == 3
    assert top_level_section_of(sample_doc, 0) == 1


def test_top_level_always_depth_one(sample_doc):
    for p in sample_doc.paragraphs:
        top = top_level_section_of(sample_doc, p.id)
        assert sample_doc.tree.depth(top) == 1


def test_top_level_root_only_tree(tmp_path):
    payload = {
        "paragraphs": [{"id": 0, "text": "x", "section_path": [0]}],
        "sections": [{"id": 0, "title": "root", "parent_id": None}],
        "media": [],
    }
    doc = load_document(write_doc(tmp_path, payload))
    assert top_level_section_of(doc, 0) == 0


def test_unknown_paragraph(sample_doc):
    with pytest.raises(UnknownParagraph):
        top_level_section_of(sample_doc, 99)


def test_round_trip(sample_doc_path, sample_doc, tmp_path):
    canonical = json.loads(sample_doc_path.read_text())
    serialized = serialize(sample_doc)
    # Field order normalized: compare as parsed structures.
    assert serialized["paragraphs"] == canonical["paragraphs"]
    assert serialized["media"] == canonical["media"]
    assert sorted(serialized["sections"], key=lambda s: s["id"]) == \
        sorted(canonical["sections"], key=lambda s: s["id"])
    # And loading the serialized form is a fixed point.
    doc2 = load_document(write_doc(tmp_path, serialized))
    assert serialize(doc2) == serialized


def test_blank_paragraphs_dropped(tmp_path):
    payload = minimal_doc()
    payload["paragraphs"] = [
        {"id": 0, "text": "  \n\t ", "section_path": [0, 1]},
        {"id": 1, "text": "kept", "section_path": [0, 1]},
    ]
    doc = load_document(write_doc(tmp_path, payload))
    assert doc.dropped_blank == 1
    assert [p.text for p in doc.paragraphs] == ["kept"]
    assert doc.paragraphs[0].id == 0  # re-indexed


def test_empty_document(tmp_path):
    payload = minimal_doc()
    payload["paragraphs"] = []
    with pytest.raises(EmptyDocument):
        load_document(write_doc(tmp_path, payload))


def test_synthetic_tree_for_sectionless_document(tmp_path):
    payload = {"paragraphs": [{"id": 0, "text": "stray"}], "sections": [], "media": []}
    doc = load_document(write_doc(tmp_path, payload))
    assert doc.tree.depth(doc.paragraphs[0].section_path[-1]) == 1
    assert top_level_section_of(doc, 0) == 1


@pytest.mark.parametrize("mutate, exc", [
    (lambda d: d["paragraphs"].__setitem__(0, {"id": 5, "text": "x", "section_path": [0, 1]}),
     MalformedDocument),  # non-contiguous ids
    (lambda d: d["paragraphs"][0].pop("text"), MalformedDocument),
    (lambda d: d.pop("media"), MalformedDocument),
    (lambda d: d["sections"].append({"id": 9, "title": "r2", "parent_id": None}),
     MalformedDocument),  # two roots
    (lambda d: d["paragraphs"][0].__setitem__("section_path", [1]), MalformedDocument),
    (lambda d: d["paragraphs"][0].__setitem__("section_path", [0]), MalformedDocument),
], ids=["bad-id", "no-text", "no-media", "two-roots", "path-not-from-root", "non-leaf"])
def test_malformed_documents(tmp_path, mutate, exc):
    payload = minimal_doc()
    mutate(payload)
    with pytest.raises(exc):
        load_document(write_doc(tmp_path, payload))


def test_paragraph_order_must_follow_preorder(tmp_path):
    payload = json.loads((Path(__file__).parent / "fixtures"
                          / "sample_document.json").read_text())
    # Move a Summary paragraph before the Intro ones.
    payload["paragraphs"][0]["section_path"] = [0, 3, 8]
    with pytest.raises(MalformedDocument):
        load_document(write_doc(tmp_path, payload))


def test_media_parsing(sample_doc):
    kinds = {m.kind for m in sample_doc.media}
    assert kinds == {"figure", "table"}
    assert all(m.path for m in sample_doc.media)


def test_media_bad_kind(tmp_path):
    payload = minimal_doc()
    payload["media"] = [{"id": 0, "kind": "video", "path": "x.mp4"}]
    with pytest.raises(MalformedDocument):
        load_document(write_doc(tmp_path, payload))


def test_panel_plan_validation():
    plan = PanelPlan(0, "Intro", ["point one"], {"font_size": 10})
    assert plan.font_size == 10.0
    with pytest.raises(MalformedDocument):
        PanelPlan(0, "Intro", [], {"font_size": 10})
    with pytest.raises(MalformedDocument):
        PanelPlan(0, "Intro", ["x"], {"font_size": 0})


def test_panel_plan_round_trip():
    plan = PanelPlan(2, "Results", ["a", "b"], {"font_size": 9.0, "align": "left"},
                     trim_hint=True)
    assert PanelPlan.from_dict(plan.to_dict()) == plan
    with pytest.raises(MalformedDocument):
        PanelPlan.from_dict({"panel_id": 0})
