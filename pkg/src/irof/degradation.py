"""Degraded image sequences for the three evaluator families.

Schemes: ``segment-mean`` / ``segment-black`` (ranked superpixels replaced
by dataset mean color or black), ``pixel-mean`` / ``pixel-black`` (ranked
single pixels), and ``samek-squares`` (ranked image squares replaced by
per-pixel uniform noise over the declared value range).

"Black" always means the minimum of the declared value range, which keeps
the definition meaningful for ranges like [-1, 1]. Frames are produced
incrementally: frame k is frame k-1 with one more unit overwritten, and
frame 0 is the untouched source.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Optional, Union

import numpy as np

from .errors import DataError
from .imagery import DatasetMean, Image, RelevanceMap
from .ranking import SegmentRanking, descending_order, preprocess_relevance
from .rng import Xoshiro256StarStar, derive_seed
from .segmentation import SegmentMap, segment_pixel_lists

SCHEMES = (
    "segment-mean",
    "segment-black",
    "pixel-mean",
    "pixel-black",
    "samek-squares",
)

DEFAULT_SQUARE_SIZE = 9

Replacement = Union[DatasetMean, str]


@dataclass(frozen=True, eq=False)
class RemovalSchedule:
    """Ordered removal units plus the replacement they get.

    ``steps`` holds segment labels, flat pixel indices, or flat square
    indices depending on scheme; no unit appears twice.
    """

    scheme: str
    steps: np.ndarray
    replacement: Optional[DatasetMean] = None
    square_size: Optional[int] = None
    noise_seed: Optional[int] = None

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise DataError(f"unknown scheme {self.scheme!r}")
        steps = np.ascontiguousarray(self.steps, dtype=np.int64)
        steps.setflags(write=False)
        object.__setattr__(self, "steps", steps)
        if steps.ndim != 1:
            raise DataError("steps must be a flat sequence")
        if np.unique(steps).size != steps.size:
            raise DataError("steps contain a duplicate unit")
        if self.scheme == "samek-squares":
            if not self.square_size or self.square_size < 1:
                raise DataError("samek-squares needs a positive square_size")
            if self.noise_seed is None:
                raise DataError("samek-squares needs a noise_seed")

    @property
    def step_count(self) -> int:
        return self.steps.size


def _split_replacement(replacement: Replacement, scheme_stem: str) -> tuple[str, Optional[DatasetMean]]:
    if isinstance(replacement, DatasetMean):
        return f"{scheme_stem}-mean", replacement
    if replacement == "black":
        return f"{scheme_stem}-black", None
    raise DataError(
        f"replacement must be a DatasetMean or 'black', got {replacement!r}"
    )


def build_irof_schedule(
    ranking: SegmentRanking, replacement: Replacement
) -> RemovalSchedule:
    """Full ranked segment order as a removal schedule."""
    scheme, mean = _split_replacement(replacement, "segment")
    return RemovalSchedule(scheme, ranking.order.copy(), mean)


def build_pixel_schedule(
    rmap: RelevanceMap,
    mode: str,
    budget: int,
    replacement: Replacement,
) -> RemovalSchedule:
    """Top-``budget`` pixels by preprocessed relevance, ties by index."""
    n = rmap.data.size
    if budget < 0 or budget > n:
        raise DataError(f"pixel budget {budget} outside 0..{n}")
    scheme, mean = _split_replacement(replacement, "pixel")
    flat = preprocess_relevance(rmap, mode).data.ravel()
    steps = descending_order(flat)[:budget]
    return RemovalSchedule(scheme, steps, mean)


def square_grid(height: int, width: int, square_size: int) -> tuple[int, int]:
    """Number of (row, column) square blocks; edge blocks are truncated."""
    return math.ceil(height / square_size), math.ceil(width / square_size)


def build_samek_schedule(
    rmap: RelevanceMap,
    square_size: int,
    budget: int,
    noise_seed: int,
    mode: str = "positive-only",
) -> RemovalSchedule:
    """Top-``budget`` squares by mean preprocessed relevance."""
    if square_size < 1:
        raise DataError(f"square_size must be positive, got {square_size}")
    h, w = rmap.height, rmap.width
    rows, cols = square_grid(h, w, square_size)
    n_squares = rows * cols
    if budget < 0 or budget > n_squares:
        raise DataError(f"square budget {budget} outside 0..{n_squares}")
    pre = preprocess_relevance(rmap, mode).data
    means = np.empty(n_squares, np.float64)
    for by in range(rows):
        for bx in range(cols):
            block = pre[
                by * square_size : min(h, (by + 1) * square_size),
                bx * square_size : min(w, (bx + 1) * square_size),
            ]
            means[by * cols + bx] = block.mean()
    steps = descending_order(means)[:budget]
    return RemovalSchedule(
        "samek-squares",
        steps,
        None,
        square_size=square_size,
        noise_seed=noise_seed,
    )


class DegradedSequence:
    """Lazily materialized frames X'^0..X'^K for one image and schedule.

    ``frames()`` yields K+1 images incrementally (a fresh generator per
    call, intended for a single consumer); ``frame_at(k)`` jumps straight
    to one frame, which is what fixed-fraction evaluation uses.
    """

    def __init__(
        self,
        image: Image,
        schedule: RemovalSchedule,
        segs: Optional[SegmentMap] = None,
        mean: Optional[DatasetMean] = None,
    ) -> None:
        self.source = image
        self.schedule = schedule
        scheme = schedule.scheme
        h, w, c = image.data.shape

        self._pixel_lists = None
        if scheme.startswith("segment"):
            if segs is None:
                raise DataError(f"{scheme} requires a SegmentMap")
            if (segs.height, segs.width) != (h, w):
                raise DataError("segmentation does not match image dimensions")
            if schedule.steps.size and (
                schedule.steps.min() < 0
                or schedule.steps.max() >= segs.segment_count
            ):
                raise DataError("schedule names a segment label out of range")
            self._pixel_lists = segment_pixel_lists(segs)
        elif scheme.startswith("pixel"):
            if schedule.steps.size and (
                schedule.steps.min() < 0 or schedule.steps.max() >= h * w
            ):
                raise DataError("schedule names a pixel index out of range")
        else:
            rows, cols = square_grid(h, w, schedule.square_size)
            if schedule.steps.size and (
                schedule.steps.min() < 0 or schedule.steps.max() >= rows * cols
            ):
                raise DataError("schedule names a square index out of range")
            self._square_cols = cols

        self._fill = None
        if scheme.endswith("-mean"):
            eff = mean if mean is not None else schedule.replacement
            if eff is None:
                raise DataError(f"{scheme} requires a DatasetMean")
            if eff.channels != c:
                raise DataError(
                    f"dataset mean has {eff.channels} channels, image has {c}"
                )
            self._fill = np.array(eff.per_channel_mean, np.float64)
        elif scheme.endswith("-black"):
            self._fill = np.full(c, image.value_range[0], np.float64)

    @property
    def step_count(self) -> int:
        return self.schedule.step_count

    def _apply(self, buf: np.ndarray, unit: int) -> None:
        h, w, c = buf.shape
        flat = buf.reshape(h * w, c)
        scheme = self.schedule.scheme
        if scheme.startswith("segment"):
            flat[self._pixel_lists[unit]] = self._fill
        elif scheme.startswith("pixel"):
            flat[unit] = self._fill
        else:
            size = self.schedule.square_size
            by, bx = divmod(int(unit), self._square_cols)
            y0, y1 = by * size, min(h, (by + 1) * size)
            x0, x1 = bx * size, min(w, (bx + 1) * size)
            lo, hi = self.source.value_range
            # one generator per square, keyed by square index, so a square's
            # noise is identical no matter which frame introduces it
            gen = Xoshiro256StarStar(derive_seed(self.schedule.noise_seed, int(unit)))
            block = np.empty((y1 - y0, x1 - x0, c), np.float64)
            bflat = block.ravel()
            for i in range(bflat.size):
                bflat[i] = gen.uniform(lo, hi)
            buf[y0:y1, x0:x1] = block

    def frames(self) -> Iterator[Image]:
        yield self.source
        buf = self.source.data.copy()
        for unit in self.schedule.steps.tolist():
            self._apply(buf, unit)
            yield Image(buf.copy(), self.source.value_range, validate=False)

    def frame_at(self, k: int) -> Image:
        if k < 0 or k > self.step_count:
            raise DataError(f"frame index {k} outside 0..{self.step_count}")
        if k == 0:
            return self.source
        buf = self.source.data.copy()
        for unit in self.schedule.steps[:k].tolist():
            self._apply(buf, unit)
        return Image(buf, self.source.value_range, validate=False)


def degrade(
    image: Image,
    schedule: RemovalSchedule,
    segs: Optional[SegmentMap] = None,
    mean: Optional[DatasetMean] = None,
) -> DegradedSequence:
    """Bind an image to a schedule, validating the pieces fit together."""
    return DegradedSequence(image, schedule, segs, mean)
