"""Deterministic text-to-raster rendering with token-compression accounting.

Page geometry lives in PDF points (1/72 inch); DPI only converts points
to pixels at raster time. Line breaks therefore never depend on DPI,
which is what makes a DPI sweep a pure rasterization knob. Word wrap is
greedy against the usable width using the font's advance widths; words
wider than the usable width hard-wrap at the character level rather
than dropping text.

The vendored face is DejaVu Sans (the bundled default): a freely
redistributable substitute for the nominal Verdana configuration, kept
in-repo so output bytes are reproducible across machines.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw, ImageFont

from .document import ParsedDocument
from .scoring import Scorer, VisualTokenEstimator
from .segmentation import Segment


class RenderError(Exception):
    pass


class FontUnavailable(RenderError):
    """Configured font file missing or unreadable."""


class GlyphOverflowWord(RenderError):
    """Usable width is narrower than a single glyph."""


class ZeroTextTokens(RenderError):
    """Compression accounting needs at least one text token."""


DEFAULT_FONT = "DejaVuSans.ttf"
_METRIC_SIZE = 1024  # reference pixel size for DPI-independent advances


def default_font_path() -> str:
    return str(resources.files("posterkit").joinpath("fonts", DEFAULT_FONT))


@dataclass(frozen=True)
class TypesetConfig:
    """Fixed typesetting knobs; defaults follow the A4/10pt configuration."""

    page_w: float = 595.0
    page_h: float = 842.0
    margin_x: float = 10.0
    margin_y: float = 10.0
    font_family: str = "DejaVu Sans"
    font_path: str | None = None
    font_size: float = 10.0
    line_height: float = 10.0
    dpi: int = 96
    antialias: bool = True

    def __post_init__(self):
        if self.margin_x * 2 >= self.page_w or self.margin_y * 2 >= self.page_h:
            raise ValueError("margins must be smaller than half the page")
        if self.dpi <= 0:
            raise ValueError("dpi must be > 0")
        if self.font_size <= 0 or self.line_height <= 0:
            raise ValueError("font_size and line_height must be > 0")

    @property
    def usable_w(self) -> float:
        return self.page_w - 2 * self.margin_x

    @property
    def usable_h(self) -> float:
        return self.page_h - 2 * self.margin_y

    @property
    def scale(self) -> float:
        return self.dpi / 72.0

    @property
    def raster_size(self) -> tuple[int, int]:
        return round(self.page_w * self.scale), round(self.page_h * self.scale)

    def resolved_font_path(self) -> str:
        return self.font_path or default_font_path()


class FontMetrics:
    """Advance widths in arbitrary units, measured at a fixed reference size.

    Measuring once at ``_METRIC_SIZE`` px and scaling keeps layout
    identical across DPI values and avoids per-DPI hinting wobble.
    """

    def __init__(self, font_path: str):
        try:
            self._ref = ImageFont.truetype(font_path, _METRIC_SIZE)
        except OSError as exc:
            raise FontUnavailable(f"cannot load font {font_path!r}: {exc}") from exc
        self.path = font_path

    def text_width(self, text: str, size: float) -> float:
        return self._ref.getlength(text) * size / _METRIC_SIZE

    def line_extent(self, size: float) -> float:
        """Natural ink extent of a line (ascent + descent) at ``size``."""
        ascent, descent = self._ref.getmetrics()
        return (ascent + descent) * size / _METRIC_SIZE


@lru_cache(maxsize=8)
def _metrics(font_path: str) -> FontMetrics:
    return FontMetrics(font_path)


def wrap_text(text: str, width: float, size: float, metrics: FontMetrics) -> list[str]:
    """Greedy wrap of ``text`` into lines no wider than ``width`` units.

    Explicit newlines are hard breaks. A single word wider than the line
    hard-wraps at the character level; if even one character cannot fit
    the line, the width is unusable and :class:`GlyphOverflowWord` is
    raised.
    """
    lines: list[str] = []
    for raw_line in text.split("\n"):
        words = raw_line.split(" ")
        current = ""
        for word in words:
            candidate = word if not current else current + " " + word
            if metrics.text_width(candidate, size) <= width:
                current = candidate
                continue
            if current:
                lines.append(current)
                current = ""
            # Word alone is too wide: take the longest fitting prefix, repeat.
            while word and metrics.text_width(word, size) > width:
                cut = len(word) - 1
                while cut > 0 and metrics.text_width(word[:cut], size) > width:
                    cut -= 1
                if cut == 0:
                    raise GlyphOverflowWord(
                        f"usable width {width} narrower than one glyph of {word[:1]!r}"
                    )
                lines.append(word[:cut])
                word = word[cut:]
            current = word
        lines.append(current)
    return lines


@dataclass
class RenderedPage:
    """One rasterized page plus the point-space extent of its laid-out text."""

    image: Image.Image
    width: int
    height: int
    group_section: int
    page_index: int
    n_lines: int
    text_box_pt: tuple[float, float, float, float]  # x, y, w, h in points

    def to_array(self) -> np.ndarray:
        return np.asarray(self.image)


@dataclass(frozen=True)
class CompressionReport:
    """Text-token versus image-token accounting for a rendered batch."""

    n_text: int
    n_image: int
    rho: float
    cr: float | None

    def to_dict(self) -> dict:
        return {"n_text": self.n_text, "n_image": self.n_image, "rho": self.rho, "cr": self.cr}


def group_segments(selected: list[Segment], doc: ParsedDocument) -> list[tuple[int, list[Segment]]]:
    """Group selected segments by top-level section, both levels ordered.

    Groups follow the section tree's pre-order; segments inside a group
    keep document order.
    """
    groups: dict[int, list[Segment]] = {}
    for seg in sorted(selected, key=lambda s: s.paragraph_ids[0]):
        key = doc.tree.top_level_ancestor(seg.home_section)
        groups.setdefault(key, []).append(seg)
    order = {sid: i for i, sid in enumerate(doc.tree.preorder())}
    return [(sid, groups[sid]) for sid in sorted(groups, key=order.__getitem__)]


def _paginate(lines: list[str], cfg: TypesetConfig) -> list[list[str]]:
    per_page = int(cfg.usable_h // cfg.line_height)
    if per_page < 1:
        raise RenderError("usable height shorter than one line")
    return [lines[i:i + per_page] for i in range(0, len(lines), per_page)]


def render_lines(lines: list[str], cfg: TypesetConfig, metrics: FontMetrics) -> Image.Image:
    """Rasterize one page worth of already-wrapped lines."""
    width_px, height_px = cfg.raster_size
    page = Image.new("RGB", (width_px, height_px), (255, 255, 255))
    draw = ImageDraw.Draw(page)
    if not cfg.antialias:
        draw.fontmode = "1"
    font = ImageFont.truetype(metrics.path, cfg.font_size * cfg.scale)
    for i, line in enumerate(lines):
        if not line:
            continue
        x = cfg.margin_x * cfg.scale
        y = (cfg.margin_y + i * cfg.line_height) * cfg.scale
        draw.text((x, y), line, font=font, fill=(0, 0, 0))
    return page


def render_group(group: list[Segment], cfg: TypesetConfig) -> list[RenderedPage]:
    """Render one section group to as many pages as its text needs."""
    if not group:
        raise RenderError("render_group requires a non-empty group")
    metrics = _metrics(cfg.resolved_font_path())
    text = "\n".join(seg.text for seg in group)
    lines = wrap_text(text, cfg.usable_w, cfg.font_size, metrics)
    pages = []
    for page_index, page_lines in enumerate(_paginate(lines, cfg)):
        image = render_lines(page_lines, cfg, metrics)
        max_w = max((metrics.text_width(line, cfg.font_size) for line in page_lines), default=0.0)
        pages.append(
            RenderedPage(
                image=image,
                width=image.width,
                height=image.height,
                group_section=group[0].home_section,
                page_index=page_index,
                n_lines=len(page_lines),
                text_box_pt=(cfg.margin_x, cfg.margin_y, max_w, len(page_lines) * cfg.line_height),
            )
        )
    return pages


def compression_report(selected: list[Segment], pages: list[RenderedPage],
                       scorer: Scorer, est: VisualTokenEstimator) -> CompressionReport:
    """rho = relative token saving, cr = multiplicative saving.

    rho is evaluated as ``1 - 1/cr`` so the identity between the two
    holds bit-exactly (the definitional ``(n_text - n_image) / n_text``
    agrees to rounding).
    """
    n_text = sum(scorer.count_tokens(seg.text) for seg in selected)
    if n_text <= 0:
        raise ZeroTextTokens("selected segments contain zero text tokens")
    n_image = sum(est.estimate(p.width, p.height) for p in pages)
    if n_image > 0:
        cr = n_text / n_image
        rho = 1.0 - 1.0 / cr
    else:
        cr = None
        rho = 1.0
    return CompressionReport(n_text, n_image, rho, cr)


def section_slug(title: str, section_id: int) -> str:
    slug = re.sub(r"[^a-z0-9]+", "-", title.lower()).strip("-")
    return slug or f"section-{section_id}"


def write_render_outputs(groups_pages: list[tuple[int, list[RenderedPage]]],
                         report: CompressionReport, doc: ParsedDocument,
                         out_dir: str | Path, extra: dict | None = None) -> Path:
    """Write page PNGs plus ``render_manifest.json``; returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for section_id, pages in groups_pages:
        slug = section_slug(doc.tree.nodes[section_id].title, section_id)
        for page in pages:
            name = f"{slug}_{page.page_index}.png"
            page.image.save(out / name, format="PNG")
            entries.append({
                "file": name,
                "section_id": section_id,
                "page_index": page.page_index,
                "width": page.width,
                "height": page.height,
                "n_lines": page.n_lines,
                "text_box_pt": list(page.text_box_pt),
            })
    manifest = {"pages": entries, "compression": report.to_dict()}
    if extra:
        manifest.update(extra)
    manifest_path = out / "render_manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest_path


def config_with_font_size(cfg: TypesetConfig, font_size: float) -> TypesetConfig:
    """Scale font size, keeping the configured line-height ratio."""
    ratio = cfg.line_height / cfg.font_size
    return replace(cfg, font_size=font_size, line_height=font_size * ratio)
