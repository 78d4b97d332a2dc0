"""The core metric: degradation curves, AOC, and per-method aggregation.

For one image, the pipeline is segment -> rank -> degrade -> score each
frame -> normalize by the frame-0 score -> area over the curve. The
per-method score is 100 times the mean per-image AOC, reported with its
standard error. A fixed-fraction variant (drop the top 10% of units, read
off one number) feeds the paired significance tests in the stats module.

AOC discretization is the rectangular mean over all L+1 curve points:

    AOC = (1 / (L+1)) * sum_{l=0..L} (1 - f_l)

with no clipping, so a curve that rises above 1 (confidence grows as
"relevant" content is removed) is allowed to drive the AOC negative
rather than being hidden. The l=0 term is included; it contributes 0.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

from .backend import Backend, ClassScores, class_score
from .baselines import random_ranking, sobel_relevance
from .degradation import (
    RemovalSchedule,
    build_irof_schedule,
    build_pixel_schedule,
    build_samek_schedule,
    degrade,
    square_grid,
)
from .errors import ConfigError, CurveError, DataError
from .imagery import DatasetMean, Image, RelevanceMap, compute_dataset_mean
from .ranking import SegmentRanking, rank_segments
from .rng import Xoshiro256StarStar, derive_seed
from .segmentation import SegmentMap, SlicParams, slic_segment

log = logging.getLogger("irof")

# built-in method ids that need no heatmap files
RANDOM_METHOD = "random"
SOBEL_METHOD = "sobel"
# salt so a method *named* random stays independent of the baseline arm
_RANDOM_ARM_SALT = 0x9E3779B97F4A7C15

EVALUATORS = ("irof-mean", "irof-black", "pixel-mean", "pixel-black", "samek")


@dataclass(frozen=True, eq=False)
class DegradationCurve:
    """Normalized class-score sequence f_0..f_L (f_0 is exactly 1)."""

    values: np.ndarray
    target_class: int
    method_id: str
    scheme: str

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.values, dtype=np.float64)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        if arr.ndim != 1 or arr.size < 1:
            raise DataError(f"curve must be a non-empty vector, got {arr.shape}")
        if arr[0] != 1.0:
            raise DataError(f"curve must start at exactly 1.0, got {arr[0]!r}")
        if not np.isfinite(arr).all():
            raise DataError("curve contains non-finite values")

    def __len__(self) -> int:
        return self.values.size


def aoc_values(values: Sequence[float]) -> float:
    """Rectangular-mean area over a normalized curve."""
    arr = np.asarray(values, dtype=np.float64)
    return float(np.mean(1.0 - arr))


def aoc(curve: DegradationCurve) -> float:
    return aoc_values(curve.values)


@dataclass(frozen=True, eq=False)
class IROFResult:
    """Aggregated faithfulness score for one method over a dataset."""

    method_id: str
    scheme: str
    per_image_aoc: np.ndarray
    image_ids: Tuple[str, ...]
    curves: Tuple[DegradationCurve, ...]
    skipped: Tuple[Tuple[str, str], ...]  # (image_id, reason)

    @property
    def n_images(self) -> int:
        return self.per_image_aoc.size

    @property
    def n_skipped(self) -> int:
        return len(self.skipped)

    @property
    def irof_score(self) -> float:
        return 100.0 * float(np.mean(self.per_image_aoc))

    @property
    def standard_error(self) -> Optional[float]:
        """Sample standard deviation of the 0-100 scores over sqrt(N)."""
        n = self.n_images
        if n < 2:
            return None
        sd = float(np.std(100.0 * self.per_image_aoc, ddof=1))
        return sd / math.sqrt(n)

    def to_dict(self) -> dict:
        return {
            "method_id": self.method_id,
            "scheme": self.scheme,
            "irof_score": self.irof_score,
            "se": self.standard_error,
            "n_images": self.n_images,
            "n_skipped": self.n_skipped,
            "skipped": [list(s) for s in self.skipped],
            "per_image_aoc": self.per_image_aoc.tolist(),
            "image_ids": list(self.image_ids),
        }


@dataclass(frozen=True, eq=False)
class DatasetItem:
    """One evaluation unit: an image plus its per-method heatmaps."""

    image_id: str
    image: Image
    heatmaps: Mapping[str, RelevanceMap]
    target_class: Optional[int] = None


def _score_frames(
    seq_frames: Iterable[Image], backend: Backend
) -> list[ClassScores]:
    out: list[ClassScores] = []
    batch: list[Image] = []
    for frame in seq_frames:
        batch.append(frame)
        if len(batch) == backend.batch_size:
            out.extend(backend.predict_batch(batch))
            batch.clear()
    if batch:
        out.extend(backend.predict_batch(batch))
    return out


def _resolve_target(scores0: ClassScores, target: Optional[int]) -> int:
    # no declared target: evaluate the model's own top class on the
    # untouched image, which is the usual faithfulness setting
    if target is None:
        return int(np.argmax(scores0.scores))
    if not 0 <= target < scores0.class_count:
        raise DataError(
            f"target class {target} outside 0..{scores0.class_count - 1}"
        )
    return target


def _normalize(raw: np.ndarray) -> np.ndarray:
    s0 = raw[0]
    if not math.isfinite(s0) or s0 <= 0.0:
        raise CurveError(
            f"frame-0 score {s0!r} is unusable for normalization "
            "(must be finite and > 0)"
        )
    return raw / s0


def degradation_curve(
    image: Image,
    schedule: RemovalSchedule,
    backend: Backend,
    *,
    target_class: Optional[int] = None,
    segs: Optional[SegmentMap] = None,
    mean: Optional[DatasetMean] = None,
    method_id: str = "",
) -> DegradationCurve:
    """Score every degradation frame and normalize by the frame-0 score.

    With ``target_class=None`` the class is the argmax of the frame-0
    scores. Frames are sent to the backend in batches of its batch_size.
    """
    seq = degrade(image, schedule, segs, mean)
    scores = _score_frames(seq.frames(), backend)
    target = _resolve_target(scores[0], target_class)
    raw = np.array([class_score(s, target) for s in scores], np.float64)
    return DegradationCurve(_normalize(raw), target, method_id, schedule.scheme)


def degradation_at_fraction(
    image: Image,
    schedule: RemovalSchedule,
    fraction: float,
    backend: Backend,
    *,
    target_class: Optional[int] = None,
    segs: Optional[SegmentMap] = None,
    mean: Optional[DatasetMean] = None,
) -> float:
    """1 - f_k after removing the top ``fraction`` of removal units.

    k = ceil(fraction * total units of the scheme), so any positive
    fraction removes at least one unit. Only frames 0 and k are scored.
    """
    if not 0.0 < fraction <= 1.0:
        raise ConfigError(f"fraction must be in (0, 1], got {fraction}")
    seq = degrade(image, schedule, segs, mean)
    scheme = schedule.scheme
    if scheme.startswith("segment"):
        total = segs.segment_count
    elif scheme.startswith("pixel"):
        total = image.height * image.width
    else:
        rows, cols = square_grid(image.height, image.width, schedule.square_size)
        total = rows * cols
    k = math.ceil(fraction * total)
    if k > schedule.step_count:
        raise DataError(
            f"schedule has {schedule.step_count} steps, fraction "
            f"{fraction} needs {k}"
        )
    scores = backend.predict_batch([image, seq.frame_at(k)])
    target = _resolve_target(scores[0], target_class)
    raw = np.array(
        [class_score(scores[0], target), class_score(scores[1], target)],
        np.float64,
    )
    return float(1.0 - _normalize(raw)[1])


def _ranking_for(
    item: DatasetItem,
    index: int,
    method_id: str,
    segs: SegmentMap,
    evidence_mode: str,
    run_seed: int,
) -> SegmentRanking:
    if method_id == RANDOM_METHOD and method_id not in item.heatmaps:
        return random_ranking(
            segs.segment_count,
            derive_seed(run_seed ^ _RANDOM_ARM_SALT, index),
        )
    if method_id == SOBEL_METHOD and method_id not in item.heatmaps:
        return rank_segments(sobel_relevance(item.image), segs, evidence_mode)
    rmap = item.heatmaps.get(method_id)
    if rmap is None:
        raise DataError(
            f"image {item.image_id!r} has no heatmap for method {method_id!r}"
        )
    return rank_segments(rmap, segs, evidence_mode)


def irof(
    dataset: Sequence[DatasetItem],
    method_id: str,
    backend: Backend,
    *,
    slic_params: SlicParams = SlicParams(),
    replacement: str = "mean",
    evidence_mode: str = "positive-only",
    run_seed: int = 0,
    workers: int = 1,
    dataset_mean: Optional[DatasetMean] = None,
) -> IROFResult:
    """Mean AOC of one method over a dataset (the headline score).

    ``replacement`` is "mean" or "black". The method ids "random" and
    "sobel" are built in and need no heatmap files (a supplied heatmap of
    the same name wins). Images whose frame-0 score is unusable are
    skipped and listed in the result.
    """
    if not dataset:
        raise DataError("empty dataset")
    if replacement == "mean":
        repl = dataset_mean or compute_dataset_mean([it.image for it in dataset])
        scheme = "segment-mean"
    elif replacement == "black":
        repl = "black"
        scheme = "segment-black"
    else:
        raise ConfigError(f"replacement must be 'mean' or 'black', got {replacement!r}")

    def one(index_item):
        index, item = index_item
        segs = slic_segment(item.image, slic_params)
        ranking = _ranking_for(
            item, index, method_id, segs, evidence_mode, run_seed
        )
        schedule = build_irof_schedule(ranking, repl)
        try:
            curve = degradation_curve(
                item.image,
                schedule,
                backend,
                target_class=item.target_class,
                segs=segs,
                method_id=method_id,
            )
        except CurveError as exc:
            log.warning("skipping %s: %s", item.image_id, exc)
            return index, None, str(exc)
        return index, curve, None

    results = _run_pool(one, list(enumerate(dataset)), workers)

    aocs, ids, curves, skipped = [], [], [], []
    for index, curve, reason in results:
        item_id = dataset[index].image_id
        if curve is None:
            skipped.append((item_id, reason))
        else:
            aocs.append(aoc(curve))
            ids.append(item_id)
            curves.append(curve)
    if not aocs:
        raise DataError(
            f"all {len(dataset)} images were skipped for method {method_id!r}"
        )
    return IROFResult(
        method_id,
        scheme,
        np.asarray(aocs, np.float64),
        tuple(ids),
        tuple(curves),
        tuple(skipped),
    )


def _run_pool(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        out = list(pool.map(fn, items))
    return sorted(out, key=lambda r: r[0])


def fraction_statistic(
    item: DatasetItem,
    index: int,
    method_id: Optional[str],
    evaluator: str,
    fraction: float,
    backend: Backend,
    *,
    segs: SegmentMap,
    mean: Optional[DatasetMean],
    evidence_mode: str = "positive-only",
    square_size: int = 9,
    run_seed: int = 0,
) -> float:
    """Per-image fixed-fraction degradation under one evaluator.

    ``method_id=None`` selects the random-baseline arm: a seeded uniformly
    random ordering over the evaluator's own removal units (segments,
    pixels, or squares), derived per image from the run seed.
    """
    if evaluator not in EVALUATORS:
        raise ConfigError(f"unknown evaluator {evaluator!r}")
    image = item.image
    h, w = image.height, image.width
    baseline_seed = derive_seed(run_seed, index)
    noise_seed = derive_seed(run_seed, index)

    if evaluator.startswith("irof"):
        repl = mean if evaluator.endswith("mean") else "black"
        if method_id is None:
            ranking = random_ranking(segs.segment_count, baseline_seed)
        else:
            ranking = _ranking_for(
                item, index, method_id, segs, evidence_mode, run_seed
            )
        schedule = build_irof_schedule(ranking, repl)
    elif evaluator.startswith("pixel"):
        repl = mean if evaluator.endswith("mean") else "black"
        k = math.ceil(fraction * h * w)
        if method_id is None:
            steps = Xoshiro256StarStar(baseline_seed).permutation(h * w)[:k]
            scheme = "pixel-mean" if evaluator.endswith("mean") else "pixel-black"
            schedule = RemovalSchedule(
                scheme, steps, repl if isinstance(repl, DatasetMean) else None
            )
        else:
            rmap = _require_map(item, method_id)
            schedule = build_pixel_schedule(rmap, evidence_mode, k, repl)
    else:  # samek
        rows, cols = square_grid(h, w, square_size)
        k = math.ceil(fraction * rows * cols)
        if method_id is None:
            steps = Xoshiro256StarStar(baseline_seed).permutation(rows * cols)[:k]
            schedule = RemovalSchedule(
                "samek-squares",
                steps,
                None,
                square_size=square_size,
                noise_seed=noise_seed,
            )
        else:
            rmap = _require_map(item, method_id)
            schedule = build_samek_schedule(
                rmap, square_size, k, noise_seed, mode=evidence_mode
            )
    return degradation_at_fraction(
        image,
        schedule,
        fraction,
        backend,
        target_class=item.target_class,
        segs=segs if evaluator.startswith("irof") else None,
        mean=mean,
    )


def _require_map(item: DatasetItem, method_id: str) -> RelevanceMap:
    if method_id == SOBEL_METHOD and method_id not in item.heatmaps:
        return sobel_relevance(item.image)
    rmap = item.heatmaps.get(method_id)
    if rmap is None:
        raise DataError(
            f"image {item.image_id!r} has no heatmap for method {method_id!r}"
        )
    return rmap


def write_curves_csv(path, entries: Iterable[Tuple[str, DegradationCurve]]) -> None:
    """Persist curves as CSV so scores are recomputable without inference.

    Columns: image_id, method_id, scheme, l, f_l.
    """
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image_id", "method_id", "scheme", "l", "f_l"])
        for image_id, curve in entries:
            for l, f in enumerate(curve.values.tolist()):
                writer.writerow(
                    [image_id, curve.method_id, curve.scheme, l, repr(f)]
                )
