import numpy as np
import pytest

from pmsgp.config import CameraConfig, PipelineConfig
from pmsgp.imaging import BinaryMask, DepthImage, sobel_edges


@pytest.fixture
def cfg():
    return PipelineConfig()


@pytest.fixture
def small_cfg():
    """Lighter camera for fast full-view renders in unit tests."""
    return PipelineConfig(camera=CameraConfig(height=0.70, fx=450.0, fy=450.0,
                                              full_width=640, full_height=360))


def random_blob_mask(rng, height=64, width=64, n_shapes=3):
    """Seeded union of random rectangles and discs; may be empty."""
    m = np.zeros((height, width), dtype=bool)
    for _ in range(n_shapes):
        if rng.random() < 0.5:
            r0 = int(rng.integers(0, height - 4))
            c0 = int(rng.integers(0, width - 4))
            r1 = int(rng.integers(r0 + 2, min(r0 + height // 2, height)))
            c1 = int(rng.integers(c0 + 2, min(c0 + width // 2, width)))
            m[r0:r1, c0:c1] = True
        else:
            cr = rng.uniform(4, height - 4)
            cc = rng.uniform(4, width - 4)
            rad = rng.uniform(2, min(height, width) / 4)
            rr, cc_grid = np.mgrid[0:height, 0:width]
            m |= (rr - cr) ** 2 + (cc_grid - cc) ** 2 <= rad * rad
    return m


def random_edge(rng, **kw):
    """Boundary of a random non-empty blob mask."""
    while True:
        m = random_blob_mask(rng, **kw)
        if m.sum() >= 4:
            return sobel_edges(BinaryMask(m))


def random_depth(rng, height=64, width=64, lo=0.3, hi=0.7, invalid_frac=0.0):
    d = rng.uniform(lo, hi, size=(height, width)).astype(np.float32)
    if invalid_frac > 0:
        holes = rng.random((height, width)) < invalid_frac
        d[holes] = 0.0
    return DepthImage(d)
