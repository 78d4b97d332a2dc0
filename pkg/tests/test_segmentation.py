"""Superpixel checks: worked examples, partition invariants, determinism.

Connectivity is verified against scipy.ndimage.label, an independent
4-connected component finder.
"""

import numpy as np
import pytest
from scipy import ndimage

from irof import (
    ConfigError,
    DataError,
    Image,
    SegmentMap,
    SlicParams,
    load_relevance,
    slic_segment,
)
from irof.imagery import load_image
from irof.segmentation import export_segment_map, segment_pixel_lists


def _assert_valid_partition(seg: SegmentMap) -> None:
    labels = seg.labels
    present = np.unique(labels)
    assert present[0] == 0 and present[-1] == seg.segment_count - 1
    assert len(present) == seg.segment_count
    # every label is one 4-connected region
    four = ndimage.generate_binary_structure(2, 1)
    for lbl in present:
        _, n = ndimage.label(labels == lbl, structure=four)
        assert n == 1, f"label {lbl} splits into {n} components"


def test_two_region_image_splits_at_the_boundary():
    # left half dark, right half bright, target 2: the found boundary
    # must lie within 2 px of the true edge at column 15
    img = np.zeros((30, 30, 1))
    img[:, 15:] = 1.0
    seg = slic_segment(Image(img, (0.0, 1.0)), SlicParams(target_segments=2))
    assert seg.segment_count == 2
    _assert_valid_partition(seg)
    left = seg.labels[:, :13]
    right = seg.labels[:, 17:]
    assert (left == left[0, 0]).all()
    assert (right == right[0, 0]).all()
    assert left[0, 0] != right[0, 0]


def test_constant_image_partitions_evenly():
    img = Image(np.full((20, 20, 1), 0.5), (0.0, 1.0))
    seg = slic_segment(img, SlicParams(target_segments=4))
    assert seg.segment_count == 4
    _assert_valid_partition(seg)
    counts = np.bincount(seg.labels.ravel())
    assert all(abs(int(c) - 100) <= 30 for c in counts), counts


def test_target_above_pixel_count_rejected():
    img = Image(np.zeros((3, 3, 1)), (0.0, 1.0))
    with pytest.raises(ConfigError):
        slic_segment(img, SlicParams(target_segments=10))


def test_bad_params_rejected():
    with pytest.raises(ConfigError):
        SlicParams(target_segments=1)
    with pytest.raises(ConfigError):
        SlicParams(compactness=0.0)
    with pytest.raises(ConfigError):
        SlicParams(max_iterations=0)


@pytest.mark.parametrize("channels", [1, 3])
def test_noise_image_partition_and_connectivity(channels):
    rng = np.random.default_rng(17)
    img = Image(rng.uniform(0.0, 1.0, (48, 40, channels)), (0.0, 1.0))
    seg = slic_segment(img, SlicParams(target_segments=40))
    _assert_valid_partition(seg)
    assert seg.labels.shape == (48, 40)


def test_segment_count_near_target():
    rng = np.random.default_rng(3)
    img = Image(rng.uniform(0.0, 1.0, (64, 64, 3)), (0.0, 1.0))
    for target in (20, 60):
        seg = slic_segment(img, SlicParams(target_segments=target))
        assert 0.5 * target <= seg.segment_count <= 1.5 * target


def test_determinism():
    rng = np.random.default_rng(11)
    img = Image(rng.uniform(0.0, 1.0, (32, 32, 3)), (0.0, 1.0))
    a = slic_segment(img, SlicParams(target_segments=30))
    b = slic_segment(img, SlicParams(target_segments=30))
    assert a.segment_count == b.segment_count
    assert np.array_equal(a.labels, b.labels)


def test_segments_are_spatially_local_on_smooth_content():
    # smooth ramp, grid spacing 10: every segment stays a compact patch.
    # (pure noise is excluded on purpose; with no coherent color structure
    # the color term dominates and segments legitimately sprawl)
    yy, xx = np.mgrid[0:60, 0:60]
    img = Image(((yy + xx) / 118.0)[:, :, None], (0.0, 1.0))
    seg = slic_segment(img, SlicParams(target_segments=36))
    assert seg.segment_count == 36
    for lbl in range(seg.segment_count):
        ys, xs = np.nonzero(seg.labels == lbl)
        assert np.ptp(ys) <= 25 and np.ptp(xs) <= 25, lbl


def test_labels_ordered_by_first_occurrence():
    rng = np.random.default_rng(29)
    img = Image(rng.uniform(0.0, 1.0, (40, 40, 1)), (0.0, 1.0))
    seg = slic_segment(img, SlicParams(target_segments=25))
    flat = seg.labels.ravel()
    firsts = [int(np.argmax(flat == lbl)) for lbl in range(seg.segment_count)]
    assert firsts == sorted(firsts)
    assert flat[0] == 0


def test_segment_map_validation():
    with pytest.raises(DataError):
        SegmentMap(np.array([[0, 2], [0, 2]]), 3)  # label 1 absent
    with pytest.raises(DataError):
        SegmentMap(np.array([0, 1]), 2)  # not 2-D


def test_pixel_lists_partition_the_image():
    labels = np.array([[0, 0, 1], [2, 1, 1]])
    lists = segment_pixel_lists(SegmentMap(labels, 3))
    assert [sorted(map(int, lst)) for lst in lists] == [[0, 1], [2, 4, 5], [3]]
    merged = sorted(int(i) for lst in lists for i in lst)
    assert merged == list(range(6))


def test_export_round_trip(tmp_path):
    rng = np.random.default_rng(31)
    img = Image(rng.uniform(0.0, 1.0, (24, 24, 1)), (0.0, 1.0))
    seg = slic_segment(img, SlicParams(target_segments=9))
    png = tmp_path / "seg.png"
    f32 = tmp_path / "seg.f32"
    export_segment_map(seg, png_path=png, f32_path=f32)
    # PNG codes are the labels verbatim
    back = load_image(png, (0.0, 65535.0))
    assert np.array_equal(back.data[:, :, 0].astype(np.int32), seg.labels)
    raw = load_relevance(f32)
    assert np.array_equal(raw.data.astype(np.int32), seg.labels)


def test_grayscale_and_rgb_agree_on_gray_content():
    # an RGB image with equal channels is the same stimulus as grayscale
    rng = np.random.default_rng(37)
    gray = rng.uniform(0.0, 1.0, (32, 32, 1))
    rgb = np.repeat(gray, 3, axis=2)
    a = slic_segment(Image(gray, (0.0, 1.0)), SlicParams(target_segments=16))
    b = slic_segment(Image(rgb, (0.0, 1.0)), SlicParams(target_segments=16))
    assert np.array_equal(a.labels, b.labels)
