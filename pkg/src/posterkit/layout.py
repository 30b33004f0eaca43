"""Strip-gradient layout verdicts: overflow, sparse, or valid.

The crop handed to :func:`detect` must contain the panel box plus blank
surround (25% of the panel size per side is the convention used by the
callers in this package). The surround is load-bearing twice over: the
containment test is only informative when the image extends beyond the
panel, and the median activation rule needs low-gradient margin strips
to pull the median down so content strips can exceed it.

Pipeline: split the crop into n horizontal and n vertical strips,
compute each strip's mean luminance-gradient magnitude along its long
axis, activate strips strictly above the median, intersect activated
rows and columns into content cells, then compare the enclosing
rectangle and activated area against the panel box.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from ._kernels import gradient_sums, luminance


class LayoutError(Exception):
    pass


class ImageTooSmall(LayoutError):
    """Crop has fewer pixels per axis than requested strips."""


class InvalidPanelBox(LayoutError):
    """Panel box does not lie within the crop."""


class Status(str, Enum):
    OVERFLOW = "overflow"
    SPARSE = "sparse"
    VALID = "valid"


@dataclass(frozen=True)
class PanelBox:
    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise InvalidPanelBox("panel box must have positive size")

    @property
    def x2(self) -> int:
        return self.x + self.w

    @property
    def y2(self) -> int:
        return self.y + self.h

    def area(self) -> int:
        return self.w * self.h


@dataclass(frozen=True)
class DetectorConfig:
    """n_strips and tau_s are the accuracy-critical knobs.

    ``noise_floor`` keeps near-zero-gradient strips from activating when
    the median itself is zero (an almost-blank crop); ``edge_tolerance``
    absorbs anti-aliased glyph fringes at panel borders. Set both to 0
    for the literal algorithm.
    """

    n_strips: int = 512
    tau_s: float = 0.5
    edge_tolerance: int = 2
    noise_floor: float = 0.5

    def __post_init__(self):
        if self.n_strips < 2:
            raise ValueError("n_strips must be >= 2")
        if not 0.0 < self.tau_s < 1.0:
            raise ValueError("tau_s must be in (0, 1)")
        if self.edge_tolerance < 0:
            raise ValueError("edge_tolerance must be >= 0")
        if self.noise_floor < 0:
            raise ValueError("noise_floor must be >= 0")


@dataclass(frozen=True)
class StripGeometry:
    """Strip tiling of a crop: floor-sized strips, remainder on the last."""

    width: int
    height: int
    row_starts: tuple[int, ...]
    row_sizes: tuple[int, ...]
    col_starts: tuple[int, ...]
    col_sizes: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.row_starts)


@dataclass(frozen=True)
class StripProfile:
    horizontal: np.ndarray  # g^h per horizontal strip, along x
    vertical: np.ndarray  # g^v per vertical strip, along y


@dataclass(frozen=True)
class ContentRegions:
    """Activated-strip intersection cells plus their summary geometry.

    ``bbox`` is the minimum enclosing rectangle of all cells in pixel
    coordinates (x, y, w, h), None when nothing activated; ``area`` is
    the summed cell area.
    """

    geometry: StripGeometry
    activated_x: tuple[int, ...]
    activated_y: tuple[int, ...]
    bbox: tuple[int, int, int, int] | None
    area: int

    def cells(self):
        """Yield every activated (x, y, w, h) cell; quadratic, for diagnostics."""
        g = self.geometry
        for iy in self.activated_y:
            for ix in self.activated_x:
                yield (g.col_starts[ix], g.row_starts[iy], g.col_sizes[ix], g.row_sizes[iy])


@dataclass(frozen=True)
class LayoutStatus:
    status: Status
    coverage: float
    bbox: tuple[int, int, int, int] | None

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "coverage": self.coverage,
            "bbox": list(self.bbox) if self.bbox else None,
        }


def _tile(extent: int, n: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    base = extent // n
    starts = tuple(i * base for i in range(n))
    sizes = tuple(base if i < n - 1 else extent - base * (n - 1) for i in range(n))
    return starts, sizes


def split_strips(image: np.ndarray, n: int) -> StripGeometry:
    """Tile the crop into n horizontal and n vertical strips exactly."""
    height, width = image.shape[0], image.shape[1]
    if width < n or height < n:
        raise ImageTooSmall(f"crop {width}x{height} too small for {n} strips per axis")
    row_starts, row_sizes = _tile(height, n)
    col_starts, col_sizes = _tile(width, n)
    return StripGeometry(width, height, row_starts, row_sizes, col_starts, col_sizes)


def grad_mag(image: np.ndarray, start: int, size: int, axis: str) -> float:
    """Mean |adjacent luminance difference| of one strip along its long axis.

    ``axis="x"`` reads a horizontal strip (rows ``start:start+size``),
    ``axis="y"`` a vertical strip of columns. The mean is over the
    difference count, so thickness does not bias the value.
    """
    lum = luminance(np.asarray(image))
    if axis == "x":
        band = lum[start:start + size, :]
        diffs = np.abs(np.diff(band, axis=1))
    elif axis == "y":
        band = lum[:, start:start + size]
        diffs = np.abs(np.diff(band, axis=0))
    else:
        raise ValueError("axis must be 'x' or 'y'")
    return float(diffs.mean()) if diffs.size else 0.0


def strip_profile(image: np.ndarray, geometry: StripGeometry) -> StripProfile:
    """All strip gradient magnitudes in one pass over the image."""
    rgb = np.asarray(image)
    row_sums, col_sums = gradient_sums(rgb)
    width, height = geometry.width, geometry.height
    horizontal = np.empty(geometry.n, dtype=np.float64)
    vertical = np.empty(geometry.n, dtype=np.float64)
    for i, (start, size) in enumerate(zip(geometry.row_starts, geometry.row_sizes)):
        horizontal[i] = row_sums[start:start + size].sum() / (size * (width - 1))
    for i, (start, size) in enumerate(zip(geometry.col_starts, geometry.col_sizes)):
        vertical[i] = col_sums[start:start + size].sum() / (size * (height - 1))
    return StripProfile(horizontal, vertical)


def activate(profile: StripProfile, cfg: DetectorConfig) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Strip indices strictly above the per-axis median (noise floor applied)."""
    med_v = float(np.median(profile.vertical))
    med_h = float(np.median(profile.horizontal))
    activated_x = tuple(
        int(i) for i, g in enumerate(profile.vertical)
        if g > med_v and g > cfg.noise_floor
    )
    activated_y = tuple(
        int(i) for i, g in enumerate(profile.horizontal)
        if g > med_h and g > cfg.noise_floor
    )
    return activated_x, activated_y


def content_regions(activated_x: tuple[int, ...], activated_y: tuple[int, ...],
                    geometry: StripGeometry) -> ContentRegions:
    """Summarize the activated Cartesian product without materializing cells."""
    if not activated_x or not activated_y:
        return ContentRegions(geometry, tuple(activated_x), tuple(activated_y), None, 0)
    col_w = sum(geometry.col_sizes[i] for i in activated_x)
    row_h = sum(geometry.row_sizes[i] for i in activated_y)
    x0 = min(geometry.col_starts[i] for i in activated_x)
    x1 = max(geometry.col_starts[i] + geometry.col_sizes[i] for i in activated_x)
    y0 = min(geometry.row_starts[i] for i in activated_y)
    y1 = max(geometry.row_starts[i] + geometry.row_sizes[i] for i in activated_y)
    return ContentRegions(
        geometry,
        tuple(activated_x),
        tuple(activated_y),
        (x0, y0, x1 - x0, y1 - y0),
        col_w * row_h,
    )


def classify(regions: ContentRegions, panel: PanelBox, cfg: DetectorConfig) -> LayoutStatus:
    """Overflow beats sparse beats valid; empty activation is sparse."""
    coverage = regions.area / panel.area()
    if regions.bbox is not None:
        bx, by, bw, bh = regions.bbox
        tol = cfg.edge_tolerance
        contained = (
            bx >= panel.x - tol
            and by >= panel.y - tol
            and bx + bw <= panel.x2 + tol
            and by + bh <= panel.y2 + tol
        )
        if not contained:
            return LayoutStatus(Status.OVERFLOW, coverage, regions.bbox)
    if coverage < cfg.tau_s:
        return LayoutStatus(Status.SPARSE, coverage, regions.bbox)
    return LayoutStatus(Status.VALID, coverage, regions.bbox)


def detect(image, panel: PanelBox, cfg: DetectorConfig = DetectorConfig()) -> LayoutStatus:
    """Full detector pass over a crop; pure function of its inputs."""
    rgb = _as_rgb_array(image)
    height, width = rgb.shape[0], rgb.shape[1]
    if not (0 <= panel.x and 0 <= panel.y and panel.x2 <= width and panel.y2 <= height):
        raise InvalidPanelBox(
            f"panel {panel} outside crop {width}x{height}"
        )
    geometry = split_strips(rgb, cfg.n_strips)
    profile = strip_profile(rgb, geometry)
    activated_x, activated_y = activate(profile, cfg)
    regions = content_regions(activated_x, activated_y, geometry)
    return classify(regions, panel, cfg)


def _as_rgb_array(image) -> np.ndarray:
    if isinstance(image, Image.Image):
        return np.asarray(image.convert("RGB"))
    rgb = np.asarray(image)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError("expected an (H, W, 3) RGB array or PIL image")
    return rgb


def make_panel_crop(image, panel: PanelBox, margin_frac: float = 0.25,
                    margin_px: tuple[int, int] | None = None,
                    pad_to_multiple: int | None = None):
    """Crop a panel plus blank surround out of a larger page image.

    The surround is ``margin_frac`` of the panel size per side unless
    ``margin_px`` gives explicit pixel margins. Pads with white where
    the requested surround extends past the image, so the returned crop
    always has the full margin. ``pad_to_multiple`` grows the crop (white,
    right/bottom) to a multiple of the strip count; without it, a crop
    barely longer than the strip count gets one oversized remainder
    strip that can straddle content and margin and distort the median.
    Returns the crop (PIL image) and the panel box in crop coordinates.
    """
    src = image if isinstance(image, Image.Image) else Image.fromarray(np.asarray(image))
    src = src.convert("RGB")
    if margin_px is not None:
        mx, my = margin_px
    else:
        mx = int(round(panel.w * margin_frac))
        my = int(round(panel.h * margin_frac))
    crop_w, crop_h = panel.w + 2 * mx, panel.h + 2 * my
    if pad_to_multiple:
        crop_w = -(-crop_w // pad_to_multiple) * pad_to_multiple
        crop_h = -(-crop_h // pad_to_multiple) * pad_to_multiple
    crop = Image.new("RGB", (crop_w, crop_h), (255, 255, 255))
    src_box = (
        max(0, panel.x - mx),
        max(0, panel.y - my),
        min(src.width, panel.x2 + mx),
        min(src.height, panel.y2 + my),
    )
    paste_at = (src_box[0] - (panel.x - mx), src_box[1] - (panel.y - my))
    crop.paste(src.crop(src_box), paste_at)
    return crop, PanelBox(mx, my, panel.w, panel.h)


_BLUE = (209, 242, 245)
_YELLOW = (251, 244, 207)
_GREEN = (159, 250, 156)
_RED = (255, 80, 60)


def annotate(image, panel: PanelBox, cfg: DetectorConfig = DetectorConfig()) -> Image.Image:
    """Diagnostic overlay: activated strips, content cells, enclosing box.

    Vertical activated strips tint blue, horizontal ones yellow, their
    intersections green; the enclosing rectangle draws red and the panel
    box black.
    """
    rgb = _as_rgb_array(image)
    geometry = split_strips(rgb, cfg.n_strips)
    profile = strip_profile(rgb, geometry)
    activated_x, activated_y = activate(profile, cfg)
    regions = content_regions(activated_x, activated_y, geometry)

    col_mask = np.zeros(geometry.width, dtype=bool)
    for i in activated_x:
        col_mask[geometry.col_starts[i]:geometry.col_starts[i] + geometry.col_sizes[i]] = True
    row_mask = np.zeros(geometry.height, dtype=bool)
    for i in activated_y:
        row_mask[geometry.row_starts[i]:geometry.row_starts[i] + geometry.row_sizes[i]] = True

    overlay = rgb.astype(np.float64).copy()
    only_col = col_mask[None, :] & ~row_mask[:, None]
    only_row = row_mask[:, None] & ~col_mask[None, :]
    cells = row_mask[:, None] & col_mask[None, :]
    overlay[only_col] = _BLUE
    overlay[only_row] = _YELLOW
    overlay[cells] = _GREEN
    blended_px = (0.55 * rgb.astype(np.float64) + 0.45 * overlay).astype(np.uint8)
    blended = Image.fromarray(blended_px)
    draw = ImageDraw.Draw(blended)
    if regions.bbox:
        bx, by, bw, bh = regions.bbox
        draw.rectangle([bx, by, bx + bw - 1, by + bh - 1], outline=_RED, width=3)
    draw.rectangle([panel.x, panel.y, panel.x2 - 1, panel.y2 - 1], outline=(0, 0, 0), width=2)
    return blended


def write_verdict(status: LayoutStatus, path: str | Path) -> None:
    Path(path).write_text(json.dumps(status.to_dict(), indent=2) + "\n", encoding="utf-8")
