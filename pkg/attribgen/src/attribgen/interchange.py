"""File interchange with the evaluation engine.

Heatmaps go out as raw little-endian float32 payloads (`<name>.f32`) next
to a JSON sidecar carrying {height, width, channels, method_id,
value_range}; extra keys are allowed, and generation parameters are
recorded under "params". Images come in as 8/16-bit PNG (integer codes
mapped linearly onto a declared value range) or as `.f32` rasters taken
verbatim, affinely remapped when their sidecar declares a different range.
"""

import json
import math
from pathlib import Path
from typing import Optional, Sequence

import cv2
import numpy as np

from .errors import DataError


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def write_heatmap(path, data, method_id: str,
                  params: Optional[dict] = None) -> None:
    """Write a single-channel attribution map plus its sidecar."""
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2:
        raise DataError(f"heatmap must be 2-D, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise DataError("heatmap contains non-finite values")
    path = Path(path)
    meta = {
        "height": int(arr.shape[0]),
        "width": int(arr.shape[1]),
        "channels": 1,
        "method_id": method_id,
        "value_range": None,
    }
    if params:
        meta["params"] = params
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    sidecar_path(path).write_text(json.dumps(meta, sort_keys=True) + "\n",
                                  "utf-8")


def _read_sidecar(path: Path) -> dict:
    sc = sidecar_path(path)
    if not sc.is_file():
        raise DataError(f"missing sidecar {sc}")
    try:
        meta = json.loads(sc.read_text("utf-8"))
    except ValueError as exc:
        raise DataError(f"unparseable sidecar {sc}: {exc}") from None
    if not isinstance(meta, dict):
        raise DataError(f"sidecar {sc} must hold a JSON object")
    return meta


def _read_f32(path: Path) -> tuple[np.ndarray, dict]:
    meta = _read_sidecar(path)
    try:
        h, w, c = int(meta["height"]), int(meta["width"]), int(meta["channels"])
    except (KeyError, TypeError, ValueError):
        raise DataError(f"{path}: sidecar lacks height/width/channels") from None
    payload = np.frombuffer(path.read_bytes(), dtype="<f4")
    if payload.size != h * w * c:
        raise DataError(
            f"{path}: payload holds {payload.size} values, sidecar says "
            f"{h}x{w}x{c}"
        )
    return payload.astype(np.float64).reshape(h, w, c), meta


def load_raster(path, declared_range: Sequence[float]) -> np.ndarray:
    """Load an input image as (H, W, C) float64 in ``declared_range``."""
    path = Path(path)
    lo, hi = float(declared_range[0]), float(declared_range[1])
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise DataError(f"invalid declared range ({lo}, {hi})")
    if path.suffix == ".f32":
        arr, meta = _read_f32(path)
        src = meta.get("value_range")
        if src is not None and (float(src[0]), float(src[1])) != (lo, hi):
            slo, shi = float(src[0]), float(src[1])
            if not (math.isfinite(slo) and math.isfinite(shi) and slo < shi):
                raise DataError(f"{path}: sidecar value_range {src} invalid")
            arr = lo + (arr - slo) * ((hi - lo) / (shi - slo))
        if arr.shape[2] not in (1, 3):
            raise DataError(f"{path}: channels must be 1 or 3")
        return arr
    if path.suffix == ".png":
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
            unit = raw[:, :, ::-1].astype(np.float64) / scale  # BGR to RGB
        else:
            raise DataError(f"{path}: unsupported channel layout {raw.shape}")
        return lo + unit * (hi - lo)
    raise DataError(f"unsupported image format {path.suffix!r} ({path})")


def load_labels(path) -> np.ndarray:
    """Load a segment-label raster written by the engine's segment cache.

    Accepts a single-channel `.f32` of integer-valued labels or a 16-bit
    gray PNG whose codes are the labels. Labels must be 0..L-1 with every
    label present.
    """
    path = Path(path)
    if path.suffix == ".f32":
        arr, _ = _read_f32(path)
        if arr.shape[2] != 1:
            raise DataError(f"{path}: label rasters are single-channel")
        flat = arr[:, :, 0]
    elif path.suffix == ".png":
        raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
        if raw is None:
            raise DataError(f"unreadable label file {path}")
        if raw.ndim != 2:
            raise DataError(f"{path}: label PNG must be single-channel")
        flat = raw.astype(np.float64)
    else:
        raise DataError(f"unsupported label format {path.suffix!r} ({path})")
    labels = flat.astype(np.int64)
    if not np.array_equal(labels, flat):
        raise DataError(f"{path}: labels must be integer-valued")
    if labels.min() < 0:
        raise DataError(f"{path}: labels must be non-negative")
    count = int(labels.max()) + 1
    if np.unique(labels).size != count:
        raise DataError(f"{path}: labels must cover 0..L-1 without gaps")
    return labels.astype(np.int32)


def discover_rasters(images_dir) -> list[Path]:
    """Sorted image paths under a directory; `.f32` wins a stem collision."""
    d = Path(images_dir)
    if not d.is_dir():
        raise DataError(f"image directory not found: {d}")
    by_stem: dict[str, Path] = {}
    for p in sorted(d.iterdir()):
        if p.suffix == ".f32":
            by_stem[p.stem] = p
        elif p.suffix == ".png":
            by_stem.setdefault(p.stem, p)
    if not by_stem:
        raise DataError(f"no .png or .f32 images in {d}")
    return [by_stem[s] for s in sorted(by_stem)]
