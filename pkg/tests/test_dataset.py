"""Directory-discovery and dataset-assembly checks, plus chart stability."""

import json

import numpy as np
import pytest

from irof import DataError, load_dataset, save_f32
from irof.dataset import discover_images
from irof.imagery import save_png
from irof.svgplot import polyline_chart


def _write_image(d, stem, size=4):
    save_png(d / f"{stem}.png",
             np.full((size, size), 100, dtype=np.uint8))


def _write_heat(d, stem, size=4, value=0.5):
    save_f32(d / f"{stem}.f32", np.full((size, size), value),
             method_id="m")


def test_discover_images_sorted_and_filtered(tmp_path):
    _write_image(tmp_path, "b")
    _write_image(tmp_path, "a")
    save_f32(tmp_path / "c.f32", np.zeros((2, 2)), value_range=(0.0, 1.0))
    (tmp_path / "notes.txt").write_text("ignored")
    got = [p.name for p in discover_images(tmp_path)]
    assert got == ["a.png", "b.png", "c.f32"]


def test_discover_prefers_f32_on_stem_collision(tmp_path):
    _write_image(tmp_path, "x")
    save_f32(tmp_path / "x.f32", np.zeros((2, 2)), value_range=(0.0, 1.0))
    got = [p.name for p in discover_images(tmp_path)]
    assert got == ["x.f32"]


def test_discover_empty_or_missing(tmp_path):
    with pytest.raises(DataError):
        discover_images(tmp_path / "absent")
    with pytest.raises(DataError):
        discover_images(tmp_path)


def test_load_dataset_pairs_heatmaps(tmp_path):
    images = tmp_path / "images"
    heat = tmp_path / "heat"
    images.mkdir()
    heat.mkdir()
    for stem in ("p", "q"):
        _write_image(images, stem)
        _write_heat(heat, stem)
    items = load_dataset(images, {"m": str(heat)}, (0.0, 1.0))
    assert [it.image_id for it in items] == ["p", "q"]
    assert set(items[0].heatmaps) == {"m"}
    assert items[0].target_class is None
    assert items[0].image.data.shape == (4, 4, 1)


def test_load_dataset_missing_heatmap_names_both_candidates(tmp_path):
    images = tmp_path / "images"
    heat = tmp_path / "heat"
    images.mkdir()
    heat.mkdir()
    _write_image(images, "p")
    with pytest.raises(DataError) as exc:
        load_dataset(images, {"m": str(heat)}, (0.0, 1.0))
    assert "p.f32" in str(exc.value) and "p.png" in str(exc.value)


def test_load_dataset_missing_heatmap_dir(tmp_path):
    images = tmp_path / "images"
    images.mkdir()
    _write_image(images, "p")
    with pytest.raises(DataError):
        load_dataset(images, {"m": str(tmp_path / "nope")}, (0.0, 1.0))


def test_load_dataset_dimension_mismatch(tmp_path):
    images = tmp_path / "images"
    heat = tmp_path / "heat"
    images.mkdir()
    heat.mkdir()
    _write_image(images, "p", size=4)
    _write_heat(heat, "p", size=5)
    with pytest.raises(DataError):
        load_dataset(images, {"m": str(heat)}, (0.0, 1.0))


def test_target_class_precedence(tmp_path):
    images = tmp_path / "images"
    heat = tmp_path / "heat"
    images.mkdir()
    heat.mkdir()
    _write_image(images, "p")
    _write_heat(heat, "p")
    # sidecar next to the image declares a per-image target
    (images / "p.json").write_text(json.dumps({"target_class": 3}))
    items = load_dataset(images, {"m": str(heat)}, (0.0, 1.0))
    assert items[0].target_class == 3
    # an explicit override wins over the sidecar
    items = load_dataset(images, {"m": str(heat)}, (0.0, 1.0), target_class=1)
    assert items[0].target_class == 1


def test_polyline_chart_is_byte_stable(tmp_path):
    series = [
        ("one", [0.0, 0.5, 1.0], [1.0, 0.4, 0.2]),
        ("two", [0.0, 0.5, 1.0], [1.0, 0.9, 0.7]),
    ]
    a = tmp_path / "a.svg"
    b = tmp_path / "b.svg"
    polyline_chart(a, series, title="curves", x_label="x", y_label="y")
    polyline_chart(b, series, title="curves", x_label="x", y_label="y")
    assert a.read_bytes() == b.read_bytes()
    text = a.read_text()
    assert text.startswith("<svg")
    assert "curves" in text and "one" in text and "two" in text


def test_polyline_chart_escapes_markup(tmp_path):
    p = tmp_path / "esc.svg"
    polyline_chart(
        p, [("a<b&c", [0.0, 1.0], [0.0, 1.0])], title="<script>"
    )
    text = p.read_text()
    assert "<script>" not in text
    assert "a&lt;b&amp;c" in text


def test_polyline_chart_custom_x_ticks(tmp_path):
    p = tmp_path / "ticks.svg"
    polyline_chart(
        p,
        [("s", [0.0, 1.0, 2.0], [0.1, 0.2, 0.3])],
        x_tick_labels=[(0.0, "alpha"), (1.0, "beta"), (2.0, "gamma")],
    )
    text = p.read_text()
    for label in ("alpha", "beta", "gamma"):
        assert label in text
