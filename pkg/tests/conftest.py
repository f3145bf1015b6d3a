import numpy as np
import pytest

from airground.grids import ClassMap, ContinuousPose, SimWorld


def make_world(size=10, obstacles=None, robot=(5.0, 5.0, 0.0), n_classes=1, classes=None):
    """Small helper: a SimWorld with optional obstacle cells."""
    if classes is None:
        classes = np.zeros((size, size), dtype=np.int64)
    grid = np.zeros(classes.shape, dtype=bool)
    for x, y in obstacles or []:
        grid[y, x] = True
    return SimWorld(ClassMap(classes, n_classes), grid, ContinuousPose(*robot))


def grating(h, w, wavelength, angle, rgb=(1.0, 1.0, 1.0)):
    """Sinusoidal grating image tinted by an RGB weight triple."""
    ys, xs = np.mgrid[0:h, 0:w].astype(float)
    phase = np.cos(2 * np.pi * (xs * np.cos(angle) + ys * np.sin(angle)) / wavelength)
    base = (0.5 + 0.45 * phase)[..., None]
    return (np.array(rgb)[None, None, :] * base * 255).astype(np.uint8)


def flat_color(h, w, rgb):
    return np.tile(np.array(rgb, dtype=np.uint8)[None, None, :], (h, w, 1))


def checkerboard(h, w, sz, rgb1, rgb2):
    ys, xs = np.mgrid[0:h, 0:w]
    mask = ((ys // sz + xs // sz) % 2).astype(bool)
    return np.where(
        mask[..., None], np.array(rgb1, dtype=np.uint8), np.array(rgb2, dtype=np.uint8)
    ).astype(np.uint8)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
