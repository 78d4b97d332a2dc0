"""Core raster types, image/heatmap file I/O, and dataset statistics.

Two on-disk formats are understood:

* Raw-float raster: ``<name>.f32`` holding little-endian 32-bit floats,
  row-major, channel-interleaved, with a JSON sidecar ``<name>.json`` of
  ``{height, width, channels, method_id, value_range}``. Writable from any
  ecosystem with no library support; round-trips bit-exactly.
* PNG: 8- or 16-bit, grayscale or RGB. Integer codes are mapped linearly
  (1/255 or 1/65535) onto the caller's declared value range.

All types freeze their arrays after construction and are safe to share
across threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import InitVar, dataclass
from pathlib import Path
from typing import Iterable, Sequence

import cv2
import numpy as np

from .errors import DataError

# absorbs endpoint rounding from affine range mapping
_RANGE_SLACK = 1e-9


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Image:
    """A raster with a declared value range.

    ``data`` is (height, width, channels) float64 and non-writeable;
    ``channels`` is 1 or 3. Every value must lie inside ``value_range``.
    """

    data: np.ndarray
    value_range: tuple[float, float]
    validate: InitVar[bool] = True

    def __post_init__(self, validate: bool) -> None:
        arr = np.ascontiguousarray(self.data, dtype=np.float64)
        rng = (float(self.value_range[0]), float(self.value_range[1]))
        object.__setattr__(self, "data", _freeze(arr))
        object.__setattr__(self, "value_range", rng)
        if validate:
            _check_image(arr, rng)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


def _check_image(arr: np.ndarray, rng: tuple[float, float]) -> None:
    if arr.ndim != 3:
        raise DataError(f"image data must be (H, W, C), got shape {arr.shape}")
    h, w, c = arr.shape
    if h < 1 or w < 1:
        raise DataError(f"empty image: shape {arr.shape}")
    if c not in (1, 3):
        raise DataError(f"channel count must be 1 or 3, got {c}")
    lo, hi = rng
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise DataError(f"invalid value_range {rng}")
    if not np.isfinite(arr).all():
        raise DataError("image contains NaN or Inf")
    amin, amax = float(arr.min()), float(arr.max())
    if amin < lo - _RANGE_SLACK or amax > hi + _RANGE_SLACK:
        raise DataError(
            f"values [{amin}, {amax}] fall outside declared range [{lo}, {hi}]"
        )


@dataclass(frozen=True, eq=False)
class RelevanceMap:
    """Single-channel heatmap produced by an explanation method.

    Values are kept verbatim (signed maps stay signed; evidence filtering
    happens at ranking time). Must be finite everywhere and match the
    associated image's dimensions exactly.
    """

    data: np.ndarray
    method_id: str
    validate: InitVar[bool] = True

    def __post_init__(self, validate: bool) -> None:
        arr = np.ascontiguousarray(self.data, dtype=np.float64)
        object.__setattr__(self, "data", _freeze(arr))
        if validate:
            if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
                raise DataError(f"relevance map must be (H, W), got {arr.shape}")
            if not np.isfinite(arr).all():
                raise DataError("relevance map contains NaN or Inf")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class DatasetMean:
    """Per-channel mean color over an image collection (not per-pixel)."""

    per_channel_mean: tuple[float, ...]

    @property
    def channels(self) -> int:
        return len(self.per_channel_mean)


def compute_dataset_mean(images: Iterable[Image]) -> DatasetMean:
    """Arithmetic mean per channel over all pixels of all images.

    Per-image channel totals are combined with math.fsum (exact compensated
    summation), so the result is independent of collection order.
    """
    imgs = list(images)
    if not imgs:
        raise DataError("dataset mean of an empty collection")
    channels = imgs[0].channels
    for im in imgs:
        if im.channels != channels:
            raise DataError(
                f"mixed channel counts: {channels} and {im.channels}"
            )
    total_px = sum(im.height * im.width for im in imgs)
    means = []
    for c in range(channels):
        sums = [math.fsum(im.data[:, :, c].ravel().tolist()) for im in imgs]
        means.append(math.fsum(sums) / total_px)
    return DatasetMean(tuple(means))


# ---------------------------------------------------------------------------
# Raw-float raster format
# ---------------------------------------------------------------------------


def _sidecar_path(path: Path) -> Path:
    return path.with_suffix(".json")


def _read_sidecar(path: Path) -> dict:
    sc = _sidecar_path(path)
    if not sc.is_file():
        raise DataError(f"missing sidecar {sc}")
    try:
        meta = json.loads(sc.read_text("utf-8"))
    except ValueError as exc:
        raise DataError(f"unparseable sidecar {sc}: {exc}") from None
    for key in ("height", "width"):
        if not isinstance(meta.get(key), int) or meta[key] < 1:
            raise DataError(f"sidecar {sc} lacks a positive integer '{key}'")
    return meta


def _read_f32(path: Path) -> tuple[np.ndarray, dict]:
    meta = _read_sidecar(path)
    h, w = meta["height"], meta["width"]
    c = meta.get("channels", 1)
    if not isinstance(c, int) or c < 1:
        raise DataError(f"sidecar for {path} has invalid channels {c!r}")
    try:
        payload = np.fromfile(path, dtype="<f4")
    except OSError as exc:
        raise DataError(f"unreadable file {path}: {exc}") from None
    if payload.size != h * w * c:
        raise DataError(
            f"{path}: sidecar says {h}x{w}x{c} = {h * w * c} values, "
            f"payload has {payload.size}"
        )
    return payload.astype(np.float64).reshape(h, w, c), meta


def save_f32(
    path,
    data: np.ndarray,
    *,
    method_id: str | None = None,
    value_range: Sequence[float] | None = None,
) -> None:
    """Write a raw-float raster plus its JSON sidecar.

    ``data`` may be (H, W) or (H, W, C); it is cast to little-endian
    float32 row-major, channel-interleaved.
    """
    path = Path(path)
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise DataError(f"cannot save array of shape {data.shape} as raster")
    h, w, c = arr.shape
    meta = {
        "height": h,
        "width": w,
        "channels": c,
        "method_id": method_id,
        "value_range": list(value_range) if value_range is not None else None,
    }
    path.write_bytes(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    _sidecar_path(path).write_text(json.dumps(meta, sort_keys=True) + "\n", "utf-8")


# ---------------------------------------------------------------------------
# PNG
# ---------------------------------------------------------------------------


def _read_png_unit(path: Path) -> np.ndarray:
    """Decode a PNG to float64 in [0, 1], shape (H, W, C), C in {1, 3}."""
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise DataError(f"unreadable image file {path}")
    if raw.dtype == np.uint8:
        scale = 255.0
    elif raw.dtype == np.uint16:
        scale = 65535.0
    else:
        raise DataError(f"{path}: unsupported bit depth {raw.dtype}")
    if raw.ndim == 2:
        unit = raw.astype(np.float64)[:, :, None] / scale
    elif raw.ndim == 3 and raw.shape[2] == 3:
        # cv2 decodes BGR; flip to RGB
        unit = raw[:, :, ::-1].astype(np.float64) / scale
    else:
        raise DataError(f"{path}: unsupported channel layout {raw.shape}")
    return unit


def save_png(path, codes: np.ndarray) -> None:
    """Write integer pixel codes (uint8 or uint16, gray or RGB) as PNG."""
    path = Path(path)
    arr = np.asarray(codes)
    if arr.dtype not in (np.uint8, np.uint16):
        raise DataError(f"PNG save needs uint8/uint16, got {arr.dtype}")
    if arr.ndim == 3 and arr.shape[2] == 3:
        arr = arr[:, :, ::-1]  # RGB -> BGR for the encoder
    elif arr.ndim != 2:
        raise DataError(f"PNG save needs (H, W) or (H, W, 3), got {arr.shape}")
    if not cv2.imwrite(str(path), np.ascontiguousarray(arr)):
        raise DataError(f"failed to write {path}")


# ---------------------------------------------------------------------------
# Loaders
# ---------------------------------------------------------------------------


def load_image(path, declared_range: Sequence[float]) -> Image:
    """Load a PNG or raw-float raster as an Image in ``declared_range``.

    PNG integer codes map linearly onto the declared range. A raw-float
    file is taken verbatim when its sidecar declares the same range (or
    none), and affinely remapped when the sidecar declares a different one.
    """
    path = Path(path)
    lo, hi = float(declared_range[0]), float(declared_range[1])
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise DataError(f"invalid declared range ({lo}, {hi})")
    if path.suffix == ".f32":
        arr, meta = _read_f32(path)
        src = meta.get("value_range")
        if src is not None:
            slo, shi = float(src[0]), float(src[1])
            if not (math.isfinite(slo) and math.isfinite(shi) and slo < shi):
                raise DataError(f"{path}: sidecar value_range {src} invalid")
            if (slo, shi) != (lo, hi):
                arr = lo + (arr - slo) * ((hi - lo) / (shi - slo))
        return Image(arr, (lo, hi))
    if path.suffix == ".png":
        unit = _read_png_unit(path)
        return Image(lo + unit * (hi - lo), (lo, hi))
    raise DataError(f"unsupported image format {path.suffix!r} ({path})")


def load_relevance(path) -> RelevanceMap:
    """Load a heatmap: raw-float raster, or single-channel 16-bit PNG.

    Raw-float values are taken verbatim (no normalization); 16-bit PNG
    codes are scaled by 1/65535. method_id comes from the sidecar, falling
    back to the file stem for sidecar-less PNGs.
    """
    path = Path(path)
    if path.suffix == ".f32":
        arr, meta = _read_f32(path)
        if arr.shape[2] != 1:
            raise DataError(
                f"{path}: relevance maps are single-channel, got {arr.shape[2]}"
            )
        method_id = meta.get("method_id") or path.stem
        return RelevanceMap(arr[:, :, 0], str(method_id))
    if path.suffix == ".png":
        raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
        if raw is None:
            raise DataError(f"unreadable image file {path}")
        if raw.dtype != np.uint16 or raw.ndim != 2:
            raise DataError(
                f"{path}: PNG relevance must be single-channel 16-bit"
            )
        method_id = path.stem
        sc = _sidecar_path(path)
        if sc.is_file():
            try:
                method_id = json.loads(sc.read_text("utf-8")).get(
                    "method_id") or method_id
            except ValueError:
                pass
        return RelevanceMap(raw.astype(np.float64) / 65535.0, str(method_id))
    raise DataError(f"unsupported relevance format {path.suffix!r} ({path})")
