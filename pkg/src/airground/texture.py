"""Texture segmentation of aerial RGB images.

Pipeline: Gabor filter bank -> per-patch energy statistics, hue histogram ->
concatenated feature vector -> standardization -> k-means. The image is
tiled into non-overlapping square patches and each patch becomes one cell
of the resulting ClassMap.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .grids import ClassMap


@dataclass
class GaborKernel:
    size: int
    wavelength: float
    orientation: float
    sigma: float
    aspect_ratio: float
    phase: float
    weights: np.ndarray


def make_gabor_kernel(
    size: int,
    wavelength: float,
    orientation: float,
    sigma: float,
    aspect_ratio: float = 0.5,
    phase: float = 0.0,
) -> GaborKernel:
    """Build a real Gabor kernel on an odd size x size grid.

    g(x, y) = exp(-(x'^2 + gamma^2 y'^2) / (2 sigma^2)) * cos(2 pi x'/lambda + psi)
    with (x', y') the coordinates rotated by the orientation. The mean is
    subtracted so constant patches give an exactly zero response.
    """
    if size % 2 == 0 or size < 1:
        raise ValueError("kernel size must be odd and positive")
    if wavelength <= 0 or sigma <= 0:
        raise ValueError("wavelength and sigma must be positive")
    half = size // 2
    ys, xs = np.mgrid[-half : half + 1, -half : half + 1].astype(np.float64)
    c, s = np.cos(orientation), np.sin(orientation)
    xr = xs * c + ys * s
    yr = -xs * s + ys * c
    env = np.exp(-(xr**2 + (aspect_ratio**2) * yr**2) / (2.0 * sigma**2))
    weights = env * np.cos(2.0 * np.pi * xr / wavelength + phase)
    weights -= weights.mean()
    return GaborKernel(size, wavelength, orientation, sigma, aspect_ratio, phase, weights)


@dataclass
class FilterBank:
    """Quadrature Gabor bank: for each (orientation, wavelength) a phase-0
    (even) and phase-pi/2 (odd) kernel, stored interleaved."""

    kernels: list[GaborKernel]
    n_orientations: int
    n_scales: int

    def __post_init__(self):
        if self.n_orientations < 4 or self.n_scales < 2:
            raise ValueError("bank needs >= 4 orientations and >= 2 scales")
        sizes = {k.size for k in self.kernels}
        if len(sizes) != 1:
            raise ValueError("all kernels in a bank must share one size")

    @property
    def size(self) -> int:
        return self.kernels[0].size

    @classmethod
    def default(
        cls,
        n_orientations: int = 6,
        wavelengths: tuple = (4.0, 8.0, 16.0),
        size: int = 9,
        sigma_ratio: float = 0.56,
        aspect_ratio: float = 0.5,
    ) -> "FilterBank":
        kernels = []
        for i in range(n_orientations):
            theta = np.pi * i / n_orientations
            for lam in wavelengths:
                for psi in (0.0, np.pi / 2):
                    kernels.append(
                        make_gabor_kernel(size, lam, theta, sigma_ratio * lam, aspect_ratio, psi)
                    )
        return cls(kernels, n_orientations, len(wavelengths))


def _patch_responses(image_gray: np.ndarray, kernel: GaborKernel, patch) -> np.ndarray:
    """Valid cross-correlation of the kernel with a patch (x0, y0, w, h)."""
    x0, y0, w, h = patch
    size = kernel.size
    if w < size or h < size:
        raise ValueError("patch too small for kernel")
    sub = np.asarray(image_gray, dtype=np.float64)[y0 : y0 + h, x0 : x0 + w]
    if sub.shape != (h, w):
        raise ValueError("patch does not fit inside the image")
    windows = np.lib.stride_tricks.sliding_window_view(sub, (size, size))
    return np.tensordot(windows, kernel.weights, axes=([2, 3], [0, 1]))


def filter_energy(image_gray: np.ndarray, kernel: GaborKernel, patch) -> tuple[float, float]:
    """(mean |response|, std of response) over valid outputs inside a patch."""
    resp = _patch_responses(image_gray, kernel, patch)
    return float(np.abs(resp).mean()), float(resp.std())


def gabor_features(image_gray: np.ndarray, bank: FilterBank, patch) -> np.ndarray:
    """Per (orientation, scale) quadrature-energy statistics: mean and std
    of sqrt(even^2 + odd^2), giving 2 * O * S values."""
    feats = []
    for i in range(0, len(bank.kernels), 2):
        even = _patch_responses(image_gray, bank.kernels[i], patch)
        odd = _patch_responses(image_gray, bank.kernels[i + 1], patch)
        energy = np.hypot(even, odd)
        feats.append(energy.mean())
        feats.append(energy.std())
    return np.array(feats)


def rgb_to_hue_sat(patch_rgb: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Hue in [0, 1) and saturation in [0, 1] per pixel (standard HSV)."""
    rgb = np.asarray(patch_rgb, dtype=np.float64) / 255.0
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    maxc = rgb.max(axis=-1)
    minc = rgb.min(axis=-1)
    delta = maxc - minc
    sat = np.where(maxc > 0, delta / np.where(maxc > 0, maxc, 1.0), 0.0)
    hue = np.zeros_like(maxc)
    nz = delta > 0
    rmax = nz & (maxc == r)
    gmax = nz & ~rmax & (maxc == g)
    bmax = nz & ~rmax & ~gmax
    d = np.where(nz, delta, 1.0)
    hue[rmax] = ((g - b)[rmax] / d[rmax]) % 6.0
    hue[gmax] = (b - r)[gmax] / d[gmax] + 2.0
    hue[bmax] = (r - g)[bmax] / d[bmax] + 4.0
    return hue / 6.0, sat


def hue_histogram(patch_rgb: np.ndarray, bins: int = 12, sat_threshold: float = 0.05) -> np.ndarray:
    """Normalized hue histogram of an RGB patch.

    Pixels with saturation below the threshold have no meaningful hue and
    are spread uniformly across all bins, so an all-gray patch yields the
    uniform histogram.
    """
    if bins < 2:
        raise ValueError("need at least 2 bins")
    patch_rgb = np.asarray(patch_rgb)
    if patch_rgb.size == 0:
        raise ValueError("empty patch")
    hue, sat = rgb_to_hue_sat(patch_rgb)
    hue = hue.ravel()
    sat = sat.ravel()
    colored = sat >= sat_threshold
    hist = np.bincount(
        np.minimum((hue[colored] * bins).astype(np.int64), bins - 1), minlength=bins
    ).astype(np.float64)
    hist += np.count_nonzero(~colored) / bins
    return hist / hist.sum()


def patch_feature(
    image_rgb: np.ndarray,
    image_gray: np.ndarray,
    bank: FilterBank,
    patch,
    hue_bins: int = 12,
) -> np.ndarray:
    """Concatenated Gabor-energy + hue-histogram feature for one patch."""
    x0, y0, w, h = patch
    gab = gabor_features(image_gray, bank, patch)
    hue = hue_histogram(image_rgb[y0 : y0 + h, x0 : x0 + w], hue_bins)
    return np.concatenate([gab, hue])


@dataclass
class KMeansModel:
    k: int
    centroids: np.ndarray  # in standardized feature space
    feature_mean: np.ndarray
    feature_std: np.ndarray

    def to_json(self, path) -> None:
        payload = {
            "k": self.k,
            "centroids": {str(i): c.tolist() for i, c in enumerate(self.centroids)},
            "feature_mean": self.feature_mean.tolist(),
            "feature_std": self.feature_std.tolist(),
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=1)

    @classmethod
    def from_json(cls, path) -> "KMeansModel":
        with open(path) as fh:
            payload = json.load(fh)
        cents = np.array([payload["centroids"][str(i)] for i in range(payload["k"])])
        return cls(
            payload["k"],
            cents,
            np.array(payload["feature_mean"]),
            np.array(payload["feature_std"]),
        )


def kmeans(
    features: np.ndarray,
    k: int,
    rng: np.random.Generator,
    max_iter: int = 100,
    tol: float = 1e-6,
) -> tuple[np.ndarray, np.ndarray]:
    """Lloyd's algorithm with k-means++ seeding.

    Empty clusters are repaired by promoting the point farthest from its
    centroid. Returns (centroids, labels).
    """
    n = len(features)
    if k > n:
        raise ValueError(f"k={k} exceeds number of samples {n}")
    # k-means++ seeding
    centroids = np.empty((k, features.shape[1]))
    centroids[0] = features[rng.integers(n)]
    d2 = np.sum((features - centroids[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            centroids[j] = features[rng.integers(n)]
        else:
            centroids[j] = features[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, np.sum((features - centroids[j]) ** 2, axis=1))
    labels = np.zeros(n, dtype=np.int64)
    for _ in range(max_iter):
        dists = ((features[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        labels = dists.argmin(axis=1)
        new_centroids = centroids.copy()
        for j in range(k):
            members = labels == j
            if members.any():
                new_centroids[j] = features[members].mean(axis=0)
            else:
                worst = dists[np.arange(n), labels].argmax()
                new_centroids[j] = features[worst]
                labels[worst] = j
        shift = np.abs(new_centroids - centroids).max()
        centroids = new_centroids
        if shift < tol:
            break
    dists = ((features[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    labels = dists.argmin(axis=1)
    return centroids, labels


def segment(
    image_rgb: np.ndarray,
    k: int,
    patch_size: int = 16,
    bank: FilterBank | None = None,
    seed: int = 0,
    hue_bins: int = 12,
) -> tuple[ClassMap, KMeansModel]:
    """Segment an RGB image into k texture classes, one ClassMap cell per
    non-overlapping patch_size x patch_size patch."""
    image_rgb = np.asarray(image_rgb)
    if bank is None:
        bank = FilterBank.default()
    if patch_size < bank.size:
        raise ValueError("patch_size must be at least the kernel size")
    img_h, img_w = image_rgb.shape[:2]
    cols = img_w // patch_size
    rows = img_h // patch_size
    if cols < 1 or rows < 1:
        raise ValueError("image smaller than one patch")
    gray = np.asarray(image_rgb, dtype=np.float64).mean(axis=2)
    feats = []
    for r in range(rows):
        for c in range(cols):
            patch = (c * patch_size, r * patch_size, patch_size, patch_size)
            feats.append(patch_feature(image_rgb, gray, bank, patch, hue_bins))
    features = np.array(feats)
    mean = features.mean(axis=0)
    std = features.std(axis=0)
    std_safe = np.where(std > 1e-12, std, 1.0)
    standardized = (features - mean) / std_safe
    rng = np.random.default_rng(seed)
    centroids, labels = kmeans(standardized, k, rng)
    class_map = ClassMap(labels.reshape(rows, cols), k)
    return class_map, KMeansModel(k, centroids, mean, std_safe)
