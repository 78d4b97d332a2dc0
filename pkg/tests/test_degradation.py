"""Degradation checks: worked examples, incremental-frame invariants, noise
reproducibility. Fuzz cases confirm that once a unit is overwritten it never
reverts in later frames.
"""

import numpy as np
import pytest

from irof import (
    DataError,
    DatasetMean,
    Image,
    RelevanceMap,
    RemovalSchedule,
    SegmentMap,
    build_irof_schedule,
    build_pixel_schedule,
    build_samek_schedule,
    degrade,
    rank_segments,
)
from irof.degradation import square_grid


def _img_1x4(values) -> Image:
    return Image(np.array([[[v] for v in values]], np.float64), (0.0, 1.0))


def test_segment_mean_worked_example():
    # values (0.1, 0.2, 0.3, 0.4), segments {0,0,1,1}, removing segment 1
    # with mean 0.25 gives (0.1, 0.2, 0.25, 0.25)
    img = _img_1x4([0.1, 0.2, 0.3, 0.4])
    segs = SegmentMap(np.array([[0, 0, 1, 1]]), 2)
    sched = RemovalSchedule("segment-mean", np.array([1]), DatasetMean((0.25,)))
    frames = list(degrade(img, sched, segs=segs).frames())
    assert len(frames) == 2
    assert frames[0].data[0, :, 0].tolist() == [0.1, 0.2, 0.3, 0.4]
    assert frames[1].data[0, :, 0].tolist() == [0.1, 0.2, 0.25, 0.25]


def test_segment_black_uses_range_minimum():
    img = Image(np.zeros((1, 4, 1)) + 0.5, (-1.0, 1.0))
    segs = SegmentMap(np.array([[0, 0, 1, 1]]), 2)
    sched = RemovalSchedule("segment-black", np.array([0]))
    last = degrade(img, sched, segs=segs).frame_at(1)
    assert last.data[0, :, 0].tolist() == [-1.0, -1.0, 0.5, 0.5]


def test_pixel_schedule_takes_top_budget():
    rm = RelevanceMap(np.array([[0.1, 0.9, 0.5, 0.9]]), "m")
    sched = build_pixel_schedule(rm, "positive-only", 3, "black")
    assert sched.steps.tolist() == [1, 3, 2]  # ties by ascending index
    img = _img_1x4([0.1, 0.2, 0.3, 0.4])
    frames = list(degrade(img, sched).frames())
    assert frames[1].data[0, :, 0].tolist() == [0.1, 0.0, 0.3, 0.4]
    assert frames[3].data[0, :, 0].tolist() == [0.1, 0.0, 0.0, 0.0]


def test_irof_schedule_follows_ranking():
    rm = RelevanceMap(np.array([[0.4, -0.9, 0.1, 0.4]]), "m")
    segs = SegmentMap(np.array([[0, 1, 2, 3]]), 4)
    rk = rank_segments(rm, segs, "positive-only")
    sched = build_irof_schedule(rk, DatasetMean((0.0,)))
    assert sched.scheme == "segment-mean"
    assert sched.steps.tolist() == [0, 3, 2, 1]


def test_square_grid_truncates_edges():
    assert square_grid(10, 10, 9) == (2, 2)
    assert square_grid(9, 9, 9) == (1, 1)
    assert square_grid(64, 64, 9) == (8, 8)


def test_samek_schedule_square_means():
    # 4x4 heatmap, 2x2 squares: means are 4 independent block averages
    heat = np.array(
        [
            [1.0, 1.0, 0.0, 0.0],
            [1.0, 1.0, 0.0, 0.2],
            [0.3, 0.0, 0.9, 0.9],
            [0.0, 0.0, 0.9, 0.5],
        ]
    )
    sched = build_samek_schedule(RelevanceMap(heat, "m"), 2, 4, noise_seed=1)
    # block means: 1.0, 0.05, 0.075, 0.8 -> order 0, 3, 2, 1
    assert sched.steps.tolist() == [0, 3, 2, 1]


def test_samek_noise_is_reproducible_and_in_range():
    rng = np.random.default_rng(53)
    img = Image(rng.uniform(-1.0, 1.0, (10, 10, 1)), (-1.0, 1.0))
    heat = RelevanceMap(rng.uniform(0.0, 1.0, (10, 10)), "m")
    sched = build_samek_schedule(heat, 3, 9, noise_seed=77)
    a = degrade(img, sched).frame_at(9)
    b = degrade(img, sched).frame_at(9)
    assert np.array_equal(a.data, b.data)
    assert a.data.min() >= -1.0 and a.data.max() <= 1.0
    # a different seed gives different noise
    other = RemovalSchedule(
        "samek-squares", sched.steps, square_size=3, noise_seed=78
    )
    c = degrade(img, other).frame_at(9)
    assert not np.array_equal(a.data, c.data)


def test_samek_noise_keyed_by_square_not_step():
    # removing squares in a different order must paint identical noise
    rng = np.random.default_rng(59)
    img = Image(rng.uniform(0.0, 1.0, (6, 6, 1)), (0.0, 1.0))
    fwd = RemovalSchedule(
        "samek-squares", np.array([0, 1, 2, 3]), square_size=3, noise_seed=5
    )
    rev = RemovalSchedule(
        "samek-squares", np.array([3, 2, 1, 0]), square_size=3, noise_seed=5
    )
    a = degrade(img, fwd).frame_at(4)
    b = degrade(img, rev).frame_at(4)
    assert np.array_equal(a.data, b.data)


def test_frame_zero_is_the_source_object():
    img = _img_1x4([0.1, 0.2, 0.3, 0.4])
    segs = SegmentMap(np.array([[0, 1, 2, 3]]), 4)
    sched = RemovalSchedule("segment-black", np.array([2, 0]))
    seq = degrade(img, sched, segs=segs)
    first = next(seq.frames())
    assert first is img
    assert seq.frame_at(0) is img


def test_frame_at_matches_frames_iteration():
    rng = np.random.default_rng(61)
    img = Image(rng.uniform(0.0, 1.0, (8, 8, 3)), (0.0, 1.0))
    heat = RelevanceMap(rng.normal(0.0, 1.0, (8, 8)), "m")
    for sched in [
        build_pixel_schedule(heat, "absolute", 20, "black"),
        build_samek_schedule(heat, 3, 6, noise_seed=9),
    ]:
        seq = degrade(img, sched)
        for k, frame in enumerate(seq.frames()):
            assert np.array_equal(frame.data, seq.frame_at(k).data), k


def test_removed_units_never_revert():
    # fuzz: track overwritten pixels; each later frame must keep them equal
    # to the fill and leave untouched pixels bit-identical to the source
    rng = np.random.default_rng(67)
    for trial in range(10):
        h, w = rng.integers(4, 12, 2)
        img = Image(rng.uniform(0.0, 1.0, (h, w, 1)), (0.0, 1.0))
        n = int(h * w)
        budget = int(rng.integers(1, n + 1))
        order = rng.permutation(n)[:budget]
        sched = RemovalSchedule("pixel-black", order)
        seq = degrade(img, sched)
        removed: set[int] = set()
        for k, frame in enumerate(seq.frames()):
            flat = frame.data.reshape(n)
            if k > 0:
                removed.add(int(order[k - 1]))
            for idx in range(n):
                if idx in removed:
                    assert flat[idx] == 0.0
                else:
                    assert flat[idx] == img.data.reshape(n)[idx]


def test_full_segment_mean_removal_is_constant():
    rng = np.random.default_rng(71)
    img = Image(rng.uniform(0.0, 1.0, (6, 6, 1)), (0.0, 1.0))
    segs = SegmentMap(np.repeat(np.arange(6), 6).reshape(6, 6), 6)
    mean = DatasetMean((0.5,))
    sched = RemovalSchedule("segment-mean", np.arange(6), mean)
    last = degrade(img, sched, segs=segs).frame_at(6)
    assert (last.data == 0.5).all()


def test_schedule_validation():
    with pytest.raises(DataError):
        RemovalSchedule("segment-black", np.array([1, 1]))  # duplicate
    with pytest.raises(DataError):
        RemovalSchedule("no-such-scheme", np.array([0]))
    with pytest.raises(DataError):
        RemovalSchedule("samek-squares", np.array([0]), square_size=3)
    with pytest.raises(DataError):
        RemovalSchedule("samek-squares", np.array([0]), noise_seed=1)
    with pytest.raises(DataError):
        build_pixel_schedule(
            RelevanceMap(np.zeros((2, 2)), "m"), "signed", 5, "black"
        )


def test_degrade_validation():
    img = _img_1x4([0.1, 0.2, 0.3, 0.4])
    segs = SegmentMap(np.array([[0, 0, 1, 1]]), 2)
    with pytest.raises(DataError):  # segment scheme without segments
        degrade(img, RemovalSchedule("segment-black", np.array([0])))
    with pytest.raises(DataError):  # mean scheme without a mean
        degrade(img, RemovalSchedule("segment-mean", np.array([0])), segs=segs)
    with pytest.raises(DataError):  # label out of range
        degrade(img, RemovalSchedule("segment-black", np.array([5])), segs=segs)
    with pytest.raises(DataError):  # channel mismatch on the fill color
        degrade(
            img,
            RemovalSchedule(
                "segment-mean", np.array([0]), DatasetMean((0.1, 0.2, 0.3))
            ),
            segs=segs,
        )
    with pytest.raises(DataError):  # pixel index out of range
        degrade(img, RemovalSchedule("pixel-black", np.array([99])))
