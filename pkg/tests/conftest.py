import numpy as np
import pytest

from sideband import corpus
from sideband.image import ImageFrame, ImagePlane


@pytest.fixture(scope="session")
def bundled():
    return corpus.bundled()


@pytest.fixture(scope="session")
def edge_rich_frames():
    return [ImageFrame((p,)) for p in corpus.edge_rich().values()]


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def make_plane(arr) -> ImagePlane:
    return ImagePlane(np.asarray(arr, dtype=np.uint8))
