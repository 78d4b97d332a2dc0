"""Segment ranking: per-segment mean relevance to a removal ordering."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DataError
from .imagery import RelevanceMap
from .segmentation import SegmentMap

EVIDENCE_MODES = ("positive-only", "absolute", "signed")


@dataclass(frozen=True, eq=False)
class SegmentRanking:
    """Removal ordering, most relevant segment first.

    ``order`` is a permutation of 0..L-1 and ``importance[order[i]]`` is
    non-increasing in i (ties were broken by ascending label).
    """

    order: np.ndarray
    importance: np.ndarray
    evidence_mode: str

    def __post_init__(self) -> None:
        order = np.ascontiguousarray(self.order, dtype=np.int64)
        imp = np.ascontiguousarray(self.importance, dtype=np.float64)
        order.setflags(write=False)
        imp.setflags(write=False)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "importance", imp)
        n = order.size
        if imp.size != n or n < 1:
            raise DataError("order and importance lengths disagree")
        if not np.array_equal(np.sort(order), np.arange(n)):
            raise DataError("order is not a permutation of 0..L-1")
        ranked = imp[order]
        if (ranked[:-1] < ranked[1:]).any():
            raise DataError("importance not non-increasing along order")

    @property
    def segment_count(self) -> int:
        return self.order.size

    def to_json(self) -> str:
        return json.dumps(
            {
                "order": self.order.tolist(),
                "importance": self.importance.tolist(),
                "evidence_mode": self.evidence_mode,
            },
            sort_keys=True,
        )


def preprocess_relevance(rmap: RelevanceMap, mode: str) -> RelevanceMap:
    """Apply the evidence mode: clamp negatives, absolute value, or identity."""
    if mode == "positive-only":
        return RelevanceMap(np.maximum(rmap.data, 0.0), rmap.method_id)
    if mode == "absolute":
        return RelevanceMap(np.abs(rmap.data), rmap.method_id)
    if mode == "signed":
        return rmap
    raise DataError(f"unknown evidence mode {mode!r}")


def descending_order(values: np.ndarray) -> np.ndarray:
    """Indices sorting values descending, ties broken by ascending index."""
    return np.argsort(-np.asarray(values, dtype=np.float64), kind="stable")


def rank_segments(
    rmap: RelevanceMap, segs: SegmentMap, mode: str = "positive-only"
) -> SegmentRanking:
    """Mean preprocessed relevance per segment, sorted most relevant first.

    importance[l] = sum of relevance over segment l's pixels / pixel count.
    """
    if (rmap.height, rmap.width) != (segs.height, segs.width):
        raise DataError(
            f"relevance {rmap.data.shape} does not match segmentation "
            f"{segs.labels.shape}"
        )
    pre = preprocess_relevance(rmap, mode)
    sums, counts = kernels.label_stats(
        segs.labels, np.ascontiguousarray(pre.data), segs.segment_count
    )
    importance = sums / counts
    return SegmentRanking(descending_order(importance), importance, mode)
