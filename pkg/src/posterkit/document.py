"""In-memory model of a parsed paper and the JSON ingestion path.

The input file format is UTF-8 JSON with three top-level arrays:

* ``paragraphs``: ``{"id": int, "text": str, "section_path": [int, ...]}``
* ``sections``:   ``{"id": int, "title": str, "parent_id": int | null}``
* ``media``:      ``{"id": int, "kind": "figure"|"table", "path": str, "caption": str}``

A machine-readable schema with a validating example lives in ``docs/``.
Documents with an empty ``sections`` array get a synthetic root plus a
single "body" child so that top-level grouping stays total.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

logger = logging.getLogger(__name__)


class DocumentError(Exception):
    """Base class for ingestion and lookup failures."""


class MalformedDocument(DocumentError):
    """Input file violates the document schema; message names the field."""


class DanglingSectionRef(DocumentError):
    """A paragraph references a section id absent from the tree."""


class EmptyDocument(DocumentError):
    """The file contains zero usable paragraphs."""


class UnknownParagraph(DocumentError):
    """Paragraph id out of range."""


class UnknownSection(DocumentError):
    """Section id absent from the tree."""


@dataclass(frozen=True)
class Paragraph:
    """Smallest content unit: one paragraph with its owning-section path."""

    id: int
    text: str
    section_path: tuple[int, ...]


@dataclass(frozen=True)
class SectionNode:
    id: int
    title: str
    depth: int
    children: tuple[int, ...]


@dataclass(frozen=True)
class MediaRef:
    id: int
    kind: str  # "figure" or "table"
    path: str
    caption: str = ""


class SectionTree:
    """Rooted section hierarchy with O(1) node lookup and parent links."""

    def __init__(self, root_id: int, nodes: dict[int, SectionNode], parents: dict[int, int]):
        self.root_id = root_id
        self.nodes = nodes
        self._parents = parents

    def node(self, section_id: int) -> SectionNode:
        try:
            return self.nodes[section_id]
        except KeyError:
            raise UnknownSection(f"section id {section_id} not in tree") from None

    def depth(self, section_id: int) -> int:
        return self.node(section_id).depth

    def parent(self, section_id: int) -> int | None:
        self.node(section_id)
        return self._parents.get(section_id)

    def path_from_root(self, section_id: int) -> list[int]:
        path = [section_id]
        while (up := self._parents.get(path[-1])) is not None:
            path.append(up)
        path.reverse()
        if path[0] != self.root_id:
            raise UnknownSection(f"section id {section_id} detached from root")
        return path

    def is_leaf(self, section_id: int) -> bool:
        return not self.node(section_id).children

    def preorder(self) -> list[int]:
        order: list[int] = []
        stack = [self.root_id]
        while stack:
            nid = stack.pop()
            order.append(nid)
            stack.extend(reversed(self.nodes[nid].children))
        return order

    def top_level_ancestor(self, section_id: int) -> int:
        """Depth-1 ancestor of a section, or the root when the tree is root-only."""
        path = self.path_from_root(section_id)
        return path[1] if len(path) > 1 else path[0]


@dataclass(frozen=True)
class ParsedDocument:
    """Immutable parsed paper: paragraphs, section tree, media references.

    ``dropped_blank`` counts whitespace-only paragraphs removed at
    ingestion (they carry no scoring signal). Remaining paragraphs are
    re-indexed to keep ids contiguous.
    """

    paragraphs: tuple[Paragraph, ...]
    tree: SectionTree
    media: tuple[MediaRef, ...]
    dropped_blank: int = 0

    def paragraph(self, paragraph_id: int) -> Paragraph:
        if not 0 <= paragraph_id < len(self.paragraphs):
            raise UnknownParagraph(f"paragraph id {paragraph_id} out of range")
        return self.paragraphs[paragraph_id]

    @property
    def full_text(self) -> str:
        return "\n".join(p.text for p in self.paragraphs)


@dataclass
class PanelPlan:
    """Externally produced plan for one poster panel (bullets + render knobs).

    ``render_params`` maps names to scalars and always carries
    ``font_size`` in points. Remediation communicates back through the
    ``trim_hint`` / ``expand_hint`` flags; content itself is never
    rewritten here.
    """

    panel_id: int
    title: str
    bullets: list[str]
    render_params: dict = field(default_factory=dict)
    trim_hint: bool = False
    expand_hint: bool = False

    def __post_init__(self):
        if not self.bullets:
            raise MalformedDocument("panel plan: bullets must be non-empty")
        if self.font_size <= 0:
            raise MalformedDocument("panel plan: font_size must be > 0")

    @property
    def font_size(self) -> float:
        return float(self.render_params.get("font_size", 0))

    def to_dict(self) -> dict:
        return {
            "panel_id": self.panel_id,
            "title": self.title,
            "bullets": list(self.bullets),
            "render_params": dict(self.render_params),
            "trim_hint": self.trim_hint,
            "expand_hint": self.expand_hint,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "PanelPlan":
        for key in ("panel_id", "title", "bullets", "render_params"):
            if key not in raw:
                raise MalformedDocument(f"panel plan: missing field '{key}'")
        return cls(
            panel_id=int(raw["panel_id"]),
            title=str(raw["title"]),
            bullets=[str(b) for b in raw["bullets"]],
            render_params=dict(raw["render_params"]),
            trim_hint=bool(raw.get("trim_hint", False)),
            expand_hint=bool(raw.get("expand_hint", False)),
        )


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise MalformedDocument(message)


def _build_tree(sections_raw: list) -> SectionTree:
    nodes_raw: dict[int, dict] = {}
    for i, entry in enumerate(sections_raw):
        _require(isinstance(entry, dict), f"sections[{i}]: expected object")
        for key in ("id", "title", "parent_id"):
            _require(key in entry, f"sections[{i}]: missing field '{key}'")
        sid = entry["id"]
        _require(isinstance(sid, int), f"sections[{i}].id: expected integer")
        _require(sid not in nodes_raw, f"sections[{i}].id: duplicate id {sid}")
        nodes_raw[sid] = entry

    roots = [sid for sid, e in nodes_raw.items() if e["parent_id"] is None]
    _require(len(roots) == 1, f"sections: expected exactly one root (parent_id null), found {len(roots)}")
    root_id = roots[0]

    children: dict[int, list[int]] = {sid: [] for sid in nodes_raw}
    parents: dict[int, int] = {}
    for sid, entry in nodes_raw.items():
        pid = entry["parent_id"]
        if pid is None:
            continue
        _require(pid in nodes_raw, f"sections: parent_id {pid} of section {sid} unknown")
        children[pid].append(sid)
        parents[sid] = pid

    # Depths via BFS; anything unreached means a cycle or detached subtree.
    depths = {root_id: 0}
    queue = [root_id]
    while queue:
        nid = queue.pop(0)
        for child in children[nid]:
            _require(child not in depths, f"sections: node {child} reached twice (cycle)")
            depths[child] = depths[nid] + 1
            queue.append(child)
    _require(len(depths) == len(nodes_raw), "sections: tree contains a cycle or detached nodes")

    nodes = {
        sid: SectionNode(
            id=sid,
            title=str(entry["title"]),
            depth=depths[sid],
            children=tuple(children[sid]),
        )
        for sid, entry in nodes_raw.items()
    }
    return SectionTree(root_id, nodes, parents)


def _synthetic_tree() -> SectionTree:
    root = SectionNode(id=0, title="", depth=0, children=(1,))
    body = SectionNode(id=1, title="body", depth=1, children=())
    return SectionTree(0, {0: root, 1: body}, {1: 0})


def load_document(file_path: str | Path) -> ParsedDocument:
    """Load and validate a parsed-paper JSON file.

    Whitespace-only paragraphs are dropped (counted in ``dropped_blank``)
    and the survivors re-indexed. Reference sections are kept: filtering
    low-value content is the selection stage's job, not ingestion's.
    """
    path = Path(file_path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise
    except (OSError, ValueError) as exc:
        raise MalformedDocument(f"cannot parse {path}: {exc}") from exc

    _require(isinstance(raw, dict), "top level: expected object")
    for key in ("paragraphs", "sections", "media"):
        _require(key in raw, f"top level: missing key '{key}'")
        _require(isinstance(raw[key], list), f"top level: '{key}' must be an array")

    synthetic = not raw["sections"]
    tree = _synthetic_tree() if synthetic else _build_tree(raw["sections"])

    paragraphs: list[Paragraph] = []
    dropped = 0
    last_preorder_pos = -1
    preorder_pos = {sid: i for i, sid in enumerate(tree.preorder())}
    for i, entry in enumerate(raw["paragraphs"]):
        _require(isinstance(entry, dict), f"paragraphs[{i}]: expected object")
        for key in ("id", "text"):
            _require(key in entry, f"paragraphs[{i}]: missing field '{key}'")
        _require(entry["id"] == i, f"paragraphs[{i}].id: ids must be contiguous 0..n-1 in order, got {entry['id']}")
        text = str(entry["text"])
        if not text.strip():
            dropped += 1
            continue

        if synthetic:
            path_ids = (tree.root_id, 1)
        else:
            _require("section_path" in entry, f"paragraphs[{i}]: missing field 'section_path'")
            raw_path = entry["section_path"]
            _require(isinstance(raw_path, list) and raw_path, f"paragraphs[{i}].section_path: must be a non-empty array")
            for sid in raw_path:
                if not isinstance(sid, int) or sid not in tree.nodes:
                    raise DanglingSectionRef(f"paragraphs[{i}]: unknown section id {sid}")
            _require(raw_path[0] == tree.root_id, f"paragraphs[{i}].section_path: must start at the root")
            for parent, child in zip(raw_path, raw_path[1:]):
                _require(
                    child in tree.nodes[parent].children,
                    f"paragraphs[{i}].section_path: {child} is not a child of {parent}",
                )
            _require(
                tree.is_leaf(raw_path[-1]),
                f"paragraphs[{i}].section_path: must terminate in a leaf section",
            )
            path_ids = tuple(raw_path)

        pos = preorder_pos[path_ids[-1]]
        _require(
            pos >= last_preorder_pos,
            f"paragraphs[{i}]: paragraph order must follow the section tree's pre-order",
        )
        last_preorder_pos = pos
        paragraphs.append(Paragraph(id=len(paragraphs), text=text, section_path=path_ids))

    if not paragraphs:
        raise EmptyDocument(f"{path}: no non-blank paragraphs")
    if dropped:
        logger.warning("%s: dropped %d whitespace-only paragraph(s)", path, dropped)

    media: list[MediaRef] = []
    for i, entry in enumerate(raw["media"]):
        _require(isinstance(entry, dict), f"media[{i}]: expected object")
        for key in ("id", "kind", "path"):
            _require(key in entry, f"media[{i}]: missing field '{key}'")
        _require(entry["kind"] in ("figure", "table"), f"media[{i}].kind: must be 'figure' or 'table'")
        _require(bool(str(entry["path"])), f"media[{i}].path: must be non-empty")
        media.append(
            MediaRef(
                id=int(entry["id"]),
                kind=str(entry["kind"]),
                path=str(entry["path"]),
                caption=str(entry.get("caption", "")),
            )
        )

    return ParsedDocument(
        paragraphs=tuple(paragraphs),
        tree=tree,
        media=tuple(media),
        dropped_blank=dropped,
    )


def top_level_section_of(doc: ParsedDocument, paragraph_id: int) -> int:
    """Id of the depth-1 section owning a paragraph (root id if tree is root-only)."""
    para = doc.paragraph(paragraph_id)
    return para.section_path[1] if len(para.section_path) > 1 else para.section_path[0]


def serialize(doc: ParsedDocument) -> dict:
    """Canonical dict form of a document; inverse of :func:`load_document`
    for inputs without blank paragraphs."""
    sections = [
        {
            "id": nid,
            "title": doc.tree.nodes[nid].title,
            "parent_id": doc.tree.parent(nid),
        }
        for nid in sorted(doc.tree.nodes)
    ]
    return {
        "paragraphs": [
            {"id": p.id, "text": p.text, "section_path": list(p.section_path)}
            for p in doc.paragraphs
        ],
        "sections": sections,
        "media": [
            {"id": m.id, "kind": m.kind, "path": m.path, "caption": m.caption}
            for m in doc.media
        ],
    }
