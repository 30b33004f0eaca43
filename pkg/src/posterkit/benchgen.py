"""Synthetic ternary layout benchmark: overflow / sparse / valid panels.

Each sample is a single filled panel centered in an otherwise blank
1600x1200 crop, mirroring a poster where exactly one panel has content.
Content blocks compose a heading over a rule, tightly-leaded body text,
a speckle-textured figure placeholder, and a footer rule, so every
strip crossing the block carries gradient signal and the ink bounding
box coincides with the intended block rectangle.

Class geometry (fractions of panel area covered by the content block):

* valid:    block fills 55-90% of the panel, fully inside it
* sparse:   block fills 5-35%, fully inside
* overflow: block protrudes 5-25% of the panel dimension past >= 1 edge

The bands are generation choices for class separability; every sample
is re-checked against a per-pixel ink-mask oracle and generation aborts
if a label ever disagrees with the mask.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw, ImageFont

from .layout import PanelBox
from .render import default_font_path, wrap_text, _metrics

CROP_W, CROP_H = 1600, 1200
LABELS = ("overflow", "sparse", "valid")

_WORDS = (
    "segment graph panel poster layout token model render margin figure "
    "section score density budget boundary context sample metric strip "
    "gradient median region content overflow sparse valid detect verify "
    "wrap line page image pixel point font text caption result method"
).split()


class BenchmarkError(Exception):
    pass


class IoFailure(BenchmarkError):
    """Output directory not writable or image write failed."""


class BenchmarkIntegrityError(BenchmarkError):
    """A generated sample's ink mask disagreed with its intended label."""


@dataclass(frozen=True)
class BenchmarkEntry:
    image_path: str
    panel_box: tuple[int, int, int, int]
    label: str

    def panel(self) -> PanelBox:
        return PanelBox(*self.panel_box)


@dataclass(frozen=True)
class BenchmarkManifest:
    entries: tuple[BenchmarkEntry, ...]

    def counts(self) -> dict[str, int]:
        out = {label: 0 for label in LABELS}
        for entry in self.entries:
            out[entry.label] += 1
        return out


def ink_mask(image: Image.Image, threshold: int = 245) -> np.ndarray:
    """Boolean mask of pixels darker than near-white on any channel."""
    rgb = np.asarray(image.convert("RGB"))
    return (rgb < threshold).any(axis=2)


def mask_bbox(mask: np.ndarray) -> tuple[int, int, int, int] | None:
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    if rows.size == 0:
        return None
    return int(cols[0]), int(rows[0]), int(cols[-1] - cols[0] + 1), int(rows[-1] - rows[0] + 1)


def _filler(rng: np.random.Generator, n_words: int) -> str:
    return " ".join(_WORDS[i] for i in rng.integers(0, len(_WORDS), n_words))


def _draw_speckle(image: Image.Image, rect: tuple[int, int, int, int],
                  rng: np.random.Generator, cell: int = 3) -> None:
    """Figure placeholder: bordered rectangle of random dark/light cells."""
    x, y, w, h = rect
    rows = -(-h // cell)
    cols = -(-w // cell)
    cells = rng.integers(0, 2, size=(rows, cols), dtype=np.uint8)
    tile = np.kron(cells, np.ones((cell, cell), dtype=np.uint8))[:h, :w]
    block = np.where(tile == 1, np.uint8(235), np.uint8(30))
    patch = Image.fromarray(np.repeat(block[:, :, None], 3, axis=2), mode="RGB")
    image.paste(patch, (x, y))
    draw = ImageDraw.Draw(image)
    draw.rectangle([x, y, x + w - 1, y + h - 1], outline=(20, 20, 20), width=2)


def _draw_text_block(image: Image.Image, rect: tuple[int, int, int, int],
                     text: str, font_px: int) -> None:
    """Wrapped text at tight leading (pitch == font size) clipped to ``rect``."""
    x, y, w, h = rect
    metrics = _metrics(default_font_path())
    font = ImageFont.truetype(default_font_path(), font_px)
    draw = ImageDraw.Draw(image)
    lines = wrap_text(text, float(w), float(font_px), metrics)
    max_lines = max(1, h // font_px)
    for i, line in enumerate(lines[:max_lines]):
        draw.text((x, y + i * font_px), line, font=font, fill=(10, 10, 10))


def _draw_content(image: Image.Image, block: tuple[int, int, int, int],
                  rng: np.random.Generator) -> None:
    """Compose heading, rules, body text, and figure inside the block.

    The heading underline and footer rule span the full block width and
    the figure spans the full body height, pinning the ink bounding box
    to the block rectangle and keeping every crossing strip inked.
    """
    x, y, w, h = block
    draw = ImageDraw.Draw(image)
    heading_h = int(min(max(0.14 * h, 12), 40))
    heading_font = max(9, int(heading_h * 0.7))
    _draw_text_block(image, (x, y, w, heading_h), _filler(rng, 6).title(), heading_font)
    draw.rectangle([x, y + heading_h, x + w - 1, y + heading_h + 2], fill=(20, 20, 20))
    draw.rectangle([x, y + h - 3, x + w - 1, y + h - 1], fill=(20, 20, 20))

    body_y = y + heading_h + 5
    body_h = h - heading_h - 10
    if body_h < 8:
        return
    fig_frac = rng.uniform(0.3, 0.5)
    fig_w = max(12, int(w * fig_frac))
    text_w = w - fig_w - 4
    fig_left = bool(rng.integers(0, 2))
    fig_x = x if fig_left else x + w - fig_w
    text_x = x + fig_w + 4 if fig_left else x
    _draw_speckle(image, (fig_x, body_y, fig_w, body_h), rng)
    body_font = int(min(max(body_h / 24, 9), 16))
    n_words = max(40, int(text_w * body_h / (body_font * body_font * 3)))
    _draw_text_block(image, (text_x, body_y, max(10, text_w), body_h),
                     _filler(rng, n_words), body_font)


def _sample_panel(rng: np.random.Generator) -> PanelBox:
    w = int(rng.integers(680, 801))
    h = int(rng.integers(500, 601))
    x = (CROP_W - w) // 2 + int(rng.integers(-30, 31))
    y = (CROP_H - h) // 2 + int(rng.integers(-30, 31))
    return PanelBox(x, y, w, h)


def _block_size(rng: np.random.Generator, panel: PanelBox, area_frac: float) -> tuple[int, int]:
    jitter = float(rng.uniform(-0.15, 0.15))
    w_frac = math.sqrt(area_frac) * math.exp(jitter)
    w_frac = min(max(w_frac, area_frac / 0.96), 0.96)
    h_frac = area_frac / w_frac
    return max(24, int(panel.w * w_frac)), max(24, int(panel.h * h_frac))


def _sample_block(rng: np.random.Generator, panel: PanelBox, label: str) -> tuple[int, int, int, int]:
    inset = 8  # keep in-bounds blocks clear of the detector's edge tolerance
    if label == "valid":
        bw, bh = _block_size(rng, panel, float(rng.uniform(0.55, 0.90)))
    elif label == "sparse":
        bw, bh = _block_size(rng, panel, float(rng.uniform(0.05, 0.35)))
    else:
        bw, bh = _block_size(rng, panel, float(rng.uniform(0.30, 0.80)))

    if label in ("valid", "sparse"):
        bw = min(bw, panel.w - 2 * inset)
        bh = min(bh, panel.h - 2 * inset)
        x = panel.x + int(rng.integers(inset, panel.w - bw - inset + 1))
        y = panel.y + int(rng.integers(inset, panel.h - bh - inset + 1))
        return x, y, bw, bh

    # Overflow: protrude past exactly one panel edge by 5-25% of that axis.
    edge = ("left", "right", "top", "bottom")[int(rng.integers(0, 4))]
    if edge in ("left", "right"):
        stick = min(int(panel.w * rng.uniform(0.05, 0.25)), bw - 8)
        x = panel.x - stick if edge == "left" else panel.x2 - bw + stick
        y = panel.y + int(rng.integers(inset, max(inset + 1, panel.h - bh - inset + 1)))
    else:
        stick = min(int(panel.h * rng.uniform(0.05, 0.25)), bh - 8)
        y = panel.y - stick if edge == "top" else panel.y2 - bh + stick
        x = panel.x + int(rng.integers(inset, max(inset + 1, panel.w - bw - inset + 1)))
    return x, y, bw, bh


def _oracle_check(image: Image.Image, panel: PanelBox, label: str, name: str) -> None:
    """Brute-force per-pixel verification that the label is earned."""
    bbox = mask_bbox(ink_mask(image))
    if bbox is None:
        raise BenchmarkIntegrityError(f"{name}: no ink drawn")
    bx, by, bw, bh = bbox
    protrudes = bx < panel.x or by < panel.y or bx + bw > panel.x2 or by + bh > panel.y2
    if label == "overflow":
        if not protrudes:
            raise BenchmarkIntegrityError(f"{name}: overflow sample does not protrude")
        return
    if protrudes:
        raise BenchmarkIntegrityError(f"{name}: {label} sample leaks outside the panel")
    fraction = (bw * bh) / panel.area()
    if label == "valid" and fraction < 0.50:
        raise BenchmarkIntegrityError(f"{name}: valid sample covers only {fraction:.2f}")
    if label == "sparse" and fraction > 0.45:
        raise BenchmarkIntegrityError(f"{name}: sparse sample covers {fraction:.2f}")


def _generate_one(label: str, index: int, seed_seq: np.random.SeedSequence,
                  out_dir: Path) -> BenchmarkEntry:
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    panel = _sample_panel(rng)
    block = _sample_block(rng, panel, label)
    image = Image.new("RGB", (CROP_W, CROP_H), (255, 255, 255))
    _draw_content(image, block, rng)
    name = f"{label}_{index:03d}.png"
    _oracle_check(image, panel, label, name)
    try:
        image.save(out_dir / name, format="PNG")
    except OSError as exc:
        raise IoFailure(f"cannot write {out_dir / name}: {exc}") from exc
    return BenchmarkEntry(name, (panel.x, panel.y, panel.w, panel.h), label)


def generate_benchmark(seed: int, per_class: int, out_dir: str | Path,
                       jobs: int = 1) -> BenchmarkManifest:
    """Generate ``3 * per_class`` labeled panel crops plus a JSONL manifest.

    Every entry derives from its own spawned seed sequence, so output is
    byte-identical for a given seed regardless of ``jobs``.
    """
    if per_class < 1:
        raise ValueError("per_class must be >= 1")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create {out}: {exc}") from exc

    tasks = [(label, i) for label in LABELS for i in range(per_class)]
    seeds = np.random.SeedSequence(seed).spawn(len(tasks))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            entries = list(pool.map(
                lambda pair: _generate_one(pair[0][0], pair[0][1], pair[1], out),
                zip(tasks, seeds),
            ))
    else:
        entries = [_generate_one(label, i, ss, out) for (label, i), ss in zip(tasks, seeds)]

    manifest = BenchmarkManifest(tuple(entries))
    write_manifest(manifest, out / "manifest.jsonl")
    return manifest


def write_manifest(manifest: BenchmarkManifest, path: str | Path) -> None:
    lines = [
        json.dumps({
            "image_path": e.image_path,
            "panel_box": list(e.panel_box),
            "label": e.label,
        })
        for e in manifest.entries
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_manifest(path: str | Path) -> BenchmarkManifest:
    """Read a JSONL manifest; every referenced image must exist."""
    path = Path(path)
    entries = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        raw = json.loads(line)
        for key in ("image_path", "panel_box", "label"):
            if key not in raw:
                raise BenchmarkError(f"{path}:{lineno}: missing '{key}'")
        if raw["label"] not in LABELS:
            raise BenchmarkError(f"{path}:{lineno}: unknown label {raw['label']!r}")
        image = path.parent / raw["image_path"]
        if not image.exists():
            raise BenchmarkError(f"{path}:{lineno}: missing image {image}")
        entries.append(BenchmarkEntry(raw["image_path"], tuple(raw["panel_box"]), raw["label"]))
    return BenchmarkManifest(tuple(entries))
