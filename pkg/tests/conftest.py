import sys
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"
if str(FIXTURES) not in sys.path:
    sys.path.insert(0, str(FIXTURES))

import oracle  # noqa: E402

from irof import CallableBackend


@pytest.fixture(scope="session")
def disk_items():
    return oracle.make_disk_dataset(n=40, seed=0)


@pytest.fixture()
def disk_backend():
    return CallableBackend(oracle.disk_scores, batch_size=16)


@pytest.fixture(scope="session")
def disk_tree(tmp_path_factory, disk_items):
    """On-disk copy of the fixture dataset: images/ + heatmaps/gt/."""
    root = tmp_path_factory.mktemp("diskdata")
    oracle.write_disk_dataset(
        disk_items, root / "images", root / "heatmaps" / "gt"
    )
    return root
