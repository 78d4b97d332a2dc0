"""Uninformative reference orderings.

The random baseline is the null hypothesis every method is tested against;
the Sobel baseline carries image information but no model information.
Randomness comes from the package's portable seeded generator so published
statistics reproduce across platforms (see rng module docs).
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .errors import DataError
from .imagery import Image, RelevanceMap
from .ranking import SegmentRanking
from .rng import Xoshiro256StarStar


def random_ranking(n_segments: int, seed: int) -> SegmentRanking:
    """Uniformly random removal order over ``n_segments`` labels.

    The importance vector is a descending placeholder consistent with the
    order, so the result satisfies the same invariants as a real ranking.
    """
    if n_segments < 1:
        raise DataError(f"need at least one segment, got {n_segments}")
    order = Xoshiro256StarStar(seed).permutation(n_segments)
    importance = np.empty(n_segments, np.float64)
    importance[order] = np.arange(n_segments - 1, -1, -1, dtype=np.float64)
    return SegmentRanking(order, importance, "signed")


def sobel_relevance(image: Image) -> RelevanceMap:
    """Edge magnitude as a heatmap: sqrt(Gx^2 + Gy^2), borders replicated.

    RGB inputs are reduced to luminance 0.299 R + 0.587 G + 0.114 B first.
    """
    if image.channels == 3:
        d = image.data
        lum = 0.299 * d[:, :, 0] + 0.587 * d[:, :, 1] + 0.114 * d[:, :, 2]
    else:
        lum = image.data[:, :, 0]
    mag = kernels.sobel_magnitude(np.ascontiguousarray(lum))
    return RelevanceMap(mag, "sobel")
