import numpy as np
import pytest

from airground.texture import (
    FilterBank,
    KMeansModel,
    filter_energy,
    gabor_features,
    hue_histogram,
    kmeans,
    make_gabor_kernel,
    rgb_to_hue_sat,
    segment,
)
from conftest import checkerboard, flat_color, grating


def _naive_kernel(size, wavelength, orientation, sigma, aspect_ratio, phase):
    """Direct per-pixel evaluation of the Gabor formula (no vectorization)."""
    half = size // 2
    raw = np.empty((size, size))
    for row, y in enumerate(range(-half, half + 1)):
        for col, x in enumerate(range(-half, half + 1)):
            xr = x * np.cos(orientation) + y * np.sin(orientation)
            yr = -x * np.sin(orientation) + y * np.cos(orientation)
            env = np.exp(-(xr**2 + aspect_ratio**2 * yr**2) / (2 * sigma**2))
            raw[row, col] = env * np.cos(2 * np.pi * xr / wavelength + phase)
    return raw - raw.mean()


def test_gabor_kernel_matches_formula():
    kern = make_gabor_kernel(9, 6.0, 0.7, 3.0, 0.5, np.pi / 2)
    oracle = _naive_kernel(9, 6.0, 0.7, 3.0, 0.5, np.pi / 2)
    assert np.allclose(kern.weights, oracle, atol=1e-12)
    # DC removal makes the kernel sum to zero
    assert abs(kern.weights.sum()) < 1e-9


def test_gabor_kernel_validation():
    with pytest.raises(ValueError):
        make_gabor_kernel(8, 4.0, 0.0, 2.0)
    with pytest.raises(ValueError):
        make_gabor_kernel(9, -1.0, 0.0, 2.0)
    with pytest.raises(ValueError):
        make_gabor_kernel(9, 4.0, 0.0, 0.0)


def test_filter_energy_matches_naive_correlation(rng):
    image = rng.random((20, 24)) * 255
    kern = make_gabor_kernel(5, 4.0, 0.9, 2.0)
    patch = (3, 2, 14, 12)
    mean_abs, std = filter_energy(image, kern, patch)

    # naive sliding correlation over the same patch
    x0, y0, w, h = patch
    sub = image[y0 : y0 + h, x0 : x0 + w]
    vals = []
    for r in range(h - 4):
        for c in range(w - 4):
            vals.append(np.sum(sub[r : r + 5, c : c + 5] * kern.weights))
    vals = np.array(vals)
    assert mean_abs == pytest.approx(np.abs(vals).mean(), rel=1e-9)
    assert std == pytest.approx(vals.std(), rel=1e-9)


def test_filter_energy_zero_on_constant_patch():
    image = np.full((32, 32), 123.0)
    kern = make_gabor_kernel(9, 8.0, 0.3, 4.0)
    mean_abs, std = filter_energy(image, kern, (0, 0, 32, 32))
    assert mean_abs == pytest.approx(0.0, abs=1e-9)
    assert std == pytest.approx(0.0, abs=1e-9)


def test_filter_energy_rejects_small_patch():
    kern = make_gabor_kernel(9, 8.0, 0.0, 4.0)
    with pytest.raises(ValueError):
        filter_energy(np.zeros((32, 32)), kern, (0, 0, 8, 8))


def test_grating_excites_matching_orientation():
    # horizontal-variation grating (structure along x): kernels with
    # orientation 0 respond most, the orthogonal ones least
    img = grating(48, 48, 8.0, 0.0).astype(np.float64).mean(axis=2)
    k_par = make_gabor_kernel(9, 8.0, 0.0, 0.56 * 8)
    k_perp = make_gabor_kernel(9, 8.0, np.pi / 2, 0.56 * 8)
    e_par, _ = filter_energy(img, k_par, (0, 0, 48, 48))
    e_perp, _ = filter_energy(img, k_perp, (0, 0, 48, 48))
    assert e_par > 5 * e_perp


def test_bank_default_shape_and_validation():
    bank = FilterBank.default()
    assert bank.n_orientations == 6 and bank.n_scales == 3
    assert len(bank.kernels) == 2 * 6 * 3
    assert bank.size == 9
    with pytest.raises(ValueError):
        FilterBank(bank.kernels, 3, 3)
    with pytest.raises(ValueError):
        FilterBank(bank.kernels, 6, 1)


def test_gabor_features_rotation_cyclic_shift():
    # rotating the image 90 degrees permutes the orientation channels
    bank = FilterBank.default(n_orientations=4, wavelengths=(4.0, 8.0))
    img = grating(48, 48, 8.0, 0.3).astype(np.float64).mean(axis=2)
    f0 = gabor_features(img, bank, (0, 0, 48, 48)).reshape(4, 2, 2)
    f90 = gabor_features(np.rot90(img), bank, (0, 0, 48, 48)).reshape(4, 2, 2)
    shifted = np.roll(f0, 2, axis=0)
    assert np.linalg.norm(f90 - shifted) < 0.05 * np.linalg.norm(f0)


def test_rgb_to_hue_sat_primaries():
    img = np.array([[[255, 0, 0], [0, 255, 0], [0, 0, 255], [128, 128, 128]]], dtype=np.uint8)
    hue, sat = rgb_to_hue_sat(img)
    assert hue[0, 0] == pytest.approx(0.0)
    assert hue[0, 1] == pytest.approx(1 / 3)
    assert hue[0, 2] == pytest.approx(2 / 3)
    assert sat[0, 3] == pytest.approx(0.0)
    assert np.all(sat[0, :3] == 1.0)


def test_hue_histogram_flat_red():
    hist = hue_histogram(flat_color(8, 8, (255, 0, 0)), bins=12)
    assert hist[0] == pytest.approx(1.0)
    assert hist.sum() == pytest.approx(1.0)


def test_hue_histogram_gray_is_uniform():
    hist = hue_histogram(flat_color(8, 8, (90, 90, 90)), bins=12)
    assert np.allclose(hist, 1.0 / 12)


def test_hue_histogram_validation():
    with pytest.raises(ValueError):
        hue_histogram(flat_color(4, 4, (255, 0, 0)), bins=1)
    with pytest.raises(ValueError):
        hue_histogram(np.zeros((0, 0, 3)))


def test_kmeans_recovers_separated_clusters(rng):
    centers = np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]])
    pts = np.concatenate([c + 0.1 * rng.standard_normal((30, 2)) for c in centers])
    centroids, labels = kmeans(pts, 3, np.random.default_rng(0))
    # each generated group lands in exactly one cluster
    for g in range(3):
        group = labels[g * 30 : (g + 1) * 30]
        assert len(np.unique(group)) == 1
    assert len(np.unique(labels)) == 3
    recovered = centroids[[labels[0], labels[30], labels[60]]]
    assert np.allclose(recovered, centers, atol=0.2)


def test_kmeans_objective_nonincreasing_in_iterations(rng):
    pts = rng.standard_normal((60, 4))

    def objective(max_iter):
        centroids, labels = kmeans(pts, 4, np.random.default_rng(5), max_iter=max_iter)
        return np.sum((pts - centroids[labels]) ** 2)

    objs = [objective(i) for i in range(1, 9)]
    for a, b in zip(objs, objs[1:]):
        assert b <= a + 1e-9


def test_kmeans_handles_duplicate_points():
    # only two distinct values but k=3: must terminate with finite centroids
    pts = np.array([[0.0, 0.0]] * 4 + [[5.0, 5.0]] * 4)
    centroids, labels = kmeans(pts, 3, np.random.default_rng(2))
    assert np.all(np.isfinite(centroids))
    assert len(np.unique(labels)) >= 2
    # with three distinct values every cluster is used
    pts3 = np.array([[0.0, 0.0]] * 3 + [[5.0, 5.0]] * 3 + [[0.0, 5.0]] * 3)
    _, labels3 = kmeans(pts3, 3, np.random.default_rng(2))
    assert len(np.unique(labels3)) == 3


def test_kmeans_rejects_k_over_n():
    with pytest.raises(ValueError):
        kmeans(np.zeros((3, 2)), 4, np.random.default_rng(0))


def _two_texture_image():
    left = grating(64, 64, 6.0, 0.0, rgb=(1.0, 0.55, 0.55))
    right = flat_color(64, 64, (60, 170, 60))
    return np.concatenate([left, right], axis=1)


def test_segment_two_textures_pure():
    class_map, model = segment(_two_texture_image(), 2, patch_size=16, seed=0)
    assert class_map.classes.shape == (4, 8)
    left = class_map.classes[:, :4]
    right = class_map.classes[:, 4:]
    assert len(np.unique(left)) == 1
    assert len(np.unique(right)) == 1
    assert left[0, 0] != right[0, 0]
    assert model.k == 2


def test_segment_three_textures_pure():
    top = _two_texture_image()
    bottom = np.concatenate(
        [checkerboard(64, 64, 8, (40, 40, 200), (220, 220, 60))] * 2, axis=1
    )
    image = np.concatenate([top, bottom], axis=0)
    class_map, _ = segment(image, 3, patch_size=16, seed=0)
    regions = [
        class_map.classes[:4, :4],
        class_map.classes[:4, 4:],
        class_map.classes[4:, :],
    ]
    ids = []
    for region in regions:
        assert len(np.unique(region)) == 1
        ids.append(region.flat[0])
    assert len(set(ids)) == 3


def test_segment_deterministic_given_seed():
    img = _two_texture_image()
    a, _ = segment(img, 2, patch_size=16, seed=7)
    b, _ = segment(img, 2, patch_size=16, seed=7)
    assert np.array_equal(a.classes, b.classes)


def test_segment_k1_and_errors():
    img = _two_texture_image()
    class_map, _ = segment(img, 1, patch_size=16, seed=0)
    assert np.all(class_map.classes == 0)
    with pytest.raises(ValueError):
        segment(img, 2, patch_size=4, seed=0)  # patch below kernel size
    with pytest.raises(ValueError):
        segment(flat_color(8, 8, (0, 0, 0)), 1, patch_size=16, seed=0)


def test_kmeans_model_round_trip(tmp_path):
    _, model = segment(_two_texture_image(), 2, patch_size=16, seed=0)
    path = tmp_path / "model.json"
    model.to_json(path)
    loaded = KMeansModel.from_json(path)
    assert loaded.k == model.k
    assert np.allclose(loaded.centroids, model.centroids)
    assert np.allclose(loaded.feature_mean, model.feature_mean)
    assert np.allclose(loaded.feature_std, model.feature_std)
