"""SLIC superpixel segmentation and segment bookkeeping.

The segmenter is k-means in (lab_l, lab_a, lab_b, x, y) space: centers start
on a regular grid, are nudged to the lowest-gradient pixel in their 3x3
neighborhood, and iterate windowed assignment with distance

    d = d_lab + (compactness / S) * d_xy,      S = sqrt(H*W / L).

Grayscale images use (intensity, x, y), where intensity is the CIELAB
lightness of the gray value after range normalization so that one
compactness setting means the same thing for color and grayscale inputs.
A post-pass merges orphan connected components into the adjacent segment
sharing the longest boundary, then labels are canonicalized in row-major
order of first occurrence. The whole procedure is deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List

import numpy as np

from . import kernels
from .errors import ConfigError, DataError
from .imagery import Image, save_f32, save_png


@dataclass(frozen=True)
class SlicParams:
    target_segments: int = 300
    compactness: float = 10.0
    max_iterations: int = 10
    # recorded for config echoes; the grid + lowest-gradient initializer is
    # fully deterministic, so the seed does not influence the output
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.target_segments < 2:
            raise ConfigError(
                f"target_segments must be >= 2, got {self.target_segments}"
            )
        if not self.compactness > 0:
            raise ConfigError(f"compactness must be > 0, got {self.compactness}")
        if self.max_iterations < 1:
            raise ConfigError(
                f"max_iterations must be >= 1, got {self.max_iterations}"
            )


@dataclass(frozen=True, eq=False)
class SegmentMap:
    """Per-pixel segment labels 0..segment_count-1, each label 4-connected."""

    labels: np.ndarray
    segment_count: int

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.labels, dtype=np.int32)
        arr.setflags(write=False)
        object.__setattr__(self, "labels", arr)
        if arr.ndim != 2:
            raise DataError(f"labels must be (H, W), got shape {arr.shape}")
        counts = np.bincount(arr.ravel(), minlength=self.segment_count)
        if counts.size != self.segment_count or (counts == 0).any():
            raise DataError(
                "labels must cover 0..L-1 contiguously with every label used"
            )

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]


def _features(image: Image) -> np.ndarray:
    """Color feature channels: CIELAB for RGB, L* of the gray level for 1ch."""
    lo, hi = image.value_range
    unit = (image.data - lo) / (hi - lo)
    if image.channels == 3:
        return kernels.rgb_to_lab(np.ascontiguousarray(unit))
    rgb = np.repeat(unit, 3, axis=2)
    lab = kernels.rgb_to_lab(np.ascontiguousarray(rgb))
    return np.ascontiguousarray(lab[:, :, :1])


def _grid_centers(h: int, w: int, target: int) -> tuple[np.ndarray, np.ndarray]:
    ny = max(1, round(math.sqrt(target * h / w)))
    nx = max(1, round(target / ny))
    sy, sx = h / ny, w / nx
    cy = np.repeat((np.arange(ny) + 0.5) * sy, nx)
    cx = np.tile((np.arange(nx) + 0.5) * sx, ny)
    return cy.astype(np.float64), cx.astype(np.float64)


def _perturb_to_low_gradient(
    cy: np.ndarray, cx: np.ndarray, grad: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    h, w = grad.shape
    out_y = np.empty_like(cy)
    out_x = np.empty_like(cx)
    for k in range(cy.size):
        yc = min(h - 1, max(0, int(round(cy[k]))))
        xc = min(w - 1, max(0, int(round(cx[k]))))
        y0, y1 = max(0, yc - 1), min(h, yc + 2)
        x0, x1 = max(0, xc - 1), min(w, xc + 2)
        win = grad[y0:y1, x0:x1]
        flat = int(np.argmin(win))  # first minimum in row-major order
        out_y[k] = y0 + flat // win.shape[1]
        out_x[k] = x0 + flat % win.shape[1]
    return out_y, out_x


def _canonical_relabel(labels: np.ndarray) -> tuple[np.ndarray, int]:
    flat = labels.ravel()
    uniq, first = np.unique(flat, return_index=True)
    order = np.argsort(first, kind="stable")
    lut = np.empty(int(uniq.max()) + 1, np.int32)
    lut[uniq[order]] = np.arange(uniq.size, dtype=np.int32)
    return lut[labels], int(uniq.size)


def slic_segment(image: Image, params: SlicParams) -> SegmentMap:
    """Partition an image into superpixels.

    Deterministic given identical inputs; the realized segment count lands
    near (not exactly at) target_segments because the initial grid is
    integer-shaped and empty clusters drop out.
    """
    h, w = image.height, image.width
    target = params.target_segments
    if target > h * w:
        raise ConfigError(
            f"target_segments {target} exceeds pixel count {h * w}"
        )

    feats = np.ascontiguousarray(_features(image))
    grad = kernels.sobel_magnitude(np.ascontiguousarray(feats[:, :, 0]))
    cy, cx = _grid_centers(h, w, target)
    cy, cx = _perturb_to_low_gradient(cy, cx, grad)
    cfeat = np.ascontiguousarray(feats[cy.astype(np.intp), cx.astype(np.intp)])

    spacing = math.sqrt(h * w / target)
    spatial_w = params.compactness / spacing
    ny = max(1, round(math.sqrt(target * h / w)))
    nx = max(1, round(target / ny))
    half = int(math.ceil(2.0 * max(spacing, h / ny, w / nx)))

    labels = None
    for _ in range(params.max_iterations):
        labels, _best = kernels.slic_assign(feats, cy, cx, cfeat, spatial_w, half)
        if (labels < 0).any():
            _assign_stragglers(labels, feats, cy, cx, cfeat, spatial_w)
        sums, counts = kernels.slic_accumulate(labels, feats, cy.size)
        live = counts > 0
        denom = counts[live].astype(np.float64)
        nf = feats.shape[2]
        cfeat[live] = sums[live, :nf] / denom[:, None]
        cy[live] = sums[live, nf] / denom
        cx[live] = sums[live, nf + 1] / denom

    connected = kernels.enforce_connectivity(
        np.ascontiguousarray(labels), cy.size
    )
    canon, count = _canonical_relabel(connected)
    return SegmentMap(canon, count)


def _assign_stragglers(labels, feats, cy, cx, cfeat, spatial_w) -> None:
    # pixels no search window reached; exact nearest-center fallback
    ys, xs = np.nonzero(labels < 0)
    for y, x in zip(ys.tolist(), xs.tolist()):
        df = np.sqrt(((cfeat - feats[y, x]) ** 2).sum(axis=1))
        ds = np.hypot(cy - y, cx - x)
        labels[y, x] = int(np.argmin(df + spatial_w * ds))


def segment_pixel_lists(seg: SegmentMap) -> List[np.ndarray]:
    """Flat pixel indices per segment; the lists partition 0..H*W-1."""
    flat = seg.labels.ravel()
    order = np.argsort(flat, kind="stable")
    counts = np.bincount(flat, minlength=seg.segment_count)
    return list(np.split(order, np.cumsum(counts)[:-1]))


def export_segment_map(seg: SegmentMap, *, png_path=None, f32_path=None) -> None:
    """Diagnostic export: labels as 16-bit PNG and/or raw-float raster."""
    if png_path is not None:
        if seg.segment_count > 65536:
            raise DataError("too many segments for 16-bit PNG export")
        save_png(png_path, seg.labels.astype(np.uint16))
    if f32_path is not None:
        save_f32(f32_path, seg.labels.astype(np.float64), method_id="segments")
