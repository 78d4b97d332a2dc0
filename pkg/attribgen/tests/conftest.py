import importlib.util
from pathlib import Path

import cv2
import numpy as np
import pytest

FIXTURES = Path(__file__).parent / "fixtures"


def fixture_path(name: str) -> str:
    return str(FIXTURES / name)


def load_fixture_module(name: str):
    """Import a fixture script directly, for reading its constants."""
    path = FIXTURES / name
    spec = importlib.util.spec_from_file_location(path.stem, path)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod


def write_gray_png(path, rng, size=12) -> None:
    cv2.imwrite(str(path), (rng.random((size, size)) * 255).astype(np.uint8))


@pytest.fixture
def image_dir(tmp_path):
    """Three small gray PNGs with deterministic content."""
    d = tmp_path / "images"
    d.mkdir()
    rng = np.random.default_rng(42)
    for i in range(3):
        write_gray_png(d / f"img{i:03d}.png", rng)
    return d
