import numpy as np
import pytest

from airground.pnm import read_pgm, read_ppm, write_pgm, write_ppm
from airground.grids import obstacles_from_pgm, obstacles_to_pgm


def test_ppm_p6_round_trip(tmp_path, rng):
    img = rng.integers(0, 256, (7, 5, 3)).astype(np.uint8)
    path = tmp_path / "img.ppm"
    write_ppm(path, img)
    assert np.array_equal(read_ppm(path), img)


def test_ppm_p3_read(tmp_path):
    path = tmp_path / "img.ppm"
    path.write_text("P3\n# a comment\n2 1\n255\n255 0 0  0 255 0\n")
    img = read_ppm(path)
    assert img.shape == (1, 2, 3)
    assert tuple(img[0, 0]) == (255, 0, 0)
    assert tuple(img[0, 1]) == (0, 255, 0)


def test_ppm_rejects_other_magic(tmp_path):
    path = tmp_path / "bad.ppm"
    path.write_bytes(b"P5\n1 1\n255\n\x00")
    with pytest.raises(ValueError):
        read_ppm(path)


def test_pgm_round_trip(tmp_path, rng):
    grid = rng.integers(0, 256, (4, 6))
    path = tmp_path / "grid.pgm"
    write_pgm(path, grid)
    assert np.array_equal(read_pgm(path), grid)


def test_pgm_rejects_out_of_range(tmp_path):
    with pytest.raises(ValueError):
        write_pgm(tmp_path / "bad.pgm", np.array([[300]]))


def test_obstacle_grid_round_trip(tmp_path, rng):
    obstacles = rng.random((6, 6)) < 0.3
    path = tmp_path / "obstacles.pgm"
    obstacles_to_pgm(path, obstacles)
    assert np.array_equal(obstacles_from_pgm(path), obstacles)
    # encoding is 0 = free, 255 = occupied
    raw = read_pgm(path)
    assert set(np.unique(raw)) <= {0, 255}
