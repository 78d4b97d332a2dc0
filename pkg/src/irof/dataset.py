"""Directory-based dataset loading for the command-line pipeline.

Images and heatmaps pair up by file stem: heatmap dir X serves image
``img7.png`` through ``X/img7.f32`` (preferred) or ``X/img7.png``. Items
are ordered by stem so run output is independent of filesystem order.

A target class may be declared per image via a ``target_class`` key in the
image's JSON sidecar; a command-line override wins over sidecars, and with
neither the engine evaluates the model's argmax class on the clean image.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence

from .engine import DatasetItem
from .errors import DataError
from .imagery import load_image, load_relevance

IMAGE_SUFFIXES = (".png", ".f32")


def discover_images(images_dir) -> List[Path]:
    """Image files in a directory, sorted by stem."""
    root = Path(images_dir)
    if not root.is_dir():
        raise DataError(f"images directory not found: {root}")
    found = {}
    for p in sorted(root.iterdir()):
        if p.suffix in IMAGE_SUFFIXES and p.is_file():
            if p.stem in found and p.suffix == ".png":
                continue  # .f32 already claimed this stem
            found[p.stem] = p
    if not found:
        raise DataError(f"no {'/'.join(IMAGE_SUFFIXES)} images in {root}")
    return [found[stem] for stem in sorted(found)]


def _sidecar_target(image_path: Path) -> Optional[int]:
    sc = image_path.with_suffix(".json")
    if not sc.is_file():
        return None
    try:
        value = json.loads(sc.read_text("utf-8")).get("target_class")
    except ValueError:
        return None
    return int(value) if isinstance(value, int) else None


def _heatmap_for(stem: str, method_dir: Path) -> Path:
    for suffix in (".f32", ".png"):
        candidate = method_dir / f"{stem}{suffix}"
        if candidate.is_file():
            return candidate
    raise DataError(
        f"no heatmap for image {stem!r} in {method_dir} "
        f"(looked for {stem}.f32 and {stem}.png)"
    )


def load_dataset(
    images_dir,
    heatmap_dirs: Mapping[str, str],
    declared_range: Sequence[float],
    *,
    target_class: Optional[int] = None,
) -> List[DatasetItem]:
    """Build DatasetItems from an image directory plus method directories."""
    for method, d in heatmap_dirs.items():
        if not Path(d).is_dir():
            raise DataError(f"heatmap directory for {method!r} not found: {d}")
    items: List[DatasetItem] = []
    for path in discover_images(images_dir):
        image = load_image(path, declared_range)
        heatmaps: Dict[str, object] = {}
        for method, d in heatmap_dirs.items():
            rmap = load_relevance(_heatmap_for(path.stem, Path(d)))
            if (rmap.height, rmap.width) != (image.height, image.width):
                raise DataError(
                    f"heatmap {method}/{path.stem} is "
                    f"{rmap.height}x{rmap.width}, image is "
                    f"{image.height}x{image.width}"
                )
            heatmaps[method] = rmap
        target = target_class if target_class is not None else _sidecar_target(path)
        items.append(DatasetItem(path.stem, image, heatmaps, target))
    return items
