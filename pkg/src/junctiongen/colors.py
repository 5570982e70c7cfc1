"""Color featurization for scene entities.

Two encodings are supported: dominant-color clusters (5 RGB centers plus
softmax-normalized counts, 20 numbers) and a discrete one-hot over a fixed
8-color palette. Both are computed from the raw pixels of an entity's
bounding box crop.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

# Palette in 8-bit RGB, normalized at module load. Order is fixed and part of
# the on-disk feature layout.
PALETTE_NAMES = ("black", "white", "red", "lime", "blue", "yellow", "magenta", "gray")
_PALETTE_RGB8 = np.array(
    [
        (0, 0, 0),
        (255, 255, 255),
        (255, 0, 0),
        (0, 255, 0),
        (0, 0, 255),
        (255, 255, 0),
        (255, 0, 255),
        (128, 128, 128),
    ],
    dtype=np.float64,
)
PALETTE = _PALETTE_RGB8 / 255.0
GRAY_INDEX = PALETTE_NAMES.index("gray")

# A color whose averaged channels deviate less than this is considered
# achromatic; only then may "gray" be selected.
GRAY_CHANNEL_STD_MAX = 30.0 / 255.0

NUM_COLOR_CLUSTERS = 5
CLUSTER_FEATURE_DIM = NUM_COLOR_CLUSTERS * 4
DISCRETE_FEATURE_DIM = len(PALETTE_NAMES)


@dataclass
class ColorClusters:
    """Top-k dominant colors: k RGB centers plus a softmax weight per center."""

    centers: np.ndarray  # (5, 3) in [0, 1]
    weights: np.ndarray  # (5,) probability vector

    def __post_init__(self) -> None:
        self.centers = np.asarray(self.centers, dtype=np.float64)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.centers.shape != (NUM_COLOR_CLUSTERS, 3):
            raise DomainError(f"cluster centers must be (5, 3), got {self.centers.shape}")
        if self.weights.shape != (NUM_COLOR_CLUSTERS,):
            raise DomainError(f"cluster weights must be (5,), got {self.weights.shape}")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > 1e-6:
            raise DomainError("cluster weights must be a probability vector")

    def vector(self) -> np.ndarray:
        """Flat 20-vector laid out as (r, g, b, weight) per cluster."""
        return np.concatenate([self.centers, self.weights[:, None]], axis=1).ravel()


@dataclass
class ColorOneHot:
    """One palette color out of the fixed 8-color set."""

    index: int

    def __post_init__(self) -> None:
        if not 0 <= self.index < len(PALETTE_NAMES):
            raise DomainError(f"palette index {self.index} out of range")

    @property
    def name(self) -> str:
        return PALETTE_NAMES[self.index]

    @classmethod
    def from_name(cls, name: str) -> "ColorOneHot":
        try:
            return cls(PALETTE_NAMES.index(name.lower()))
        except ValueError:
            raise DomainError(
                f"unknown palette color {name!r}; expected one of {', '.join(PALETTE_NAMES)}"
            ) from None

    def vector(self) -> np.ndarray:
        v = np.zeros(DISCRETE_FEATURE_DIM)
        v[self.index] = 1.0
        return v


ColorFeature = ColorClusters | ColorOneHot


def palette_rgb8() -> np.ndarray:
    """The palette as (8, 3) 8-bit integer RGB rows."""
    return _PALETTE_RGB8.astype(np.int64).copy()


def _as_unit_rgb(pixels) -> np.ndarray:
    """Coerce a pixel block to an (N, 3) float array in [0, 1].

    Values above 1 are assumed to be 8-bit and divided by 255.
    """
    arr = np.asarray(pixels, dtype=np.float64).reshape(-1, 3)
    if arr.shape[0] == 0:
        raise DomainError("empty pixel list")
    if arr.max() > 1.0:
        arr = arr / 255.0
    return np.clip(arr, 0.0, 1.0)


def _weighted_kmeans(
    values: np.ndarray,
    counts: np.ndarray,
    k: int,
    seed: int,
    max_iter: int = 20,
    tol: float = 1e-4,
) -> tuple[np.ndarray, np.ndarray]:
    """Lloyd's k-means over distinct values weighted by their multiplicities.

    Operating on the distinct-value set makes the result independent of pixel
    ordering; seeding follows the k-means++ scheme driven by `seed`.
    Returns (centers, member_counts) with zero-count clusters dropped.
    """
    rng = np.random.default_rng(seed)
    k_eff = min(k, len(values))

    centers = np.empty((k_eff, 3))
    centers[0] = values[rng.choice(len(values), p=counts / counts.sum())]
    d2 = ((values - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k_eff):
        w = counts * d2
        centers[j] = values[rng.choice(len(values), p=w / w.sum())]
        d2 = np.minimum(d2, ((values - centers[j]) ** 2).sum(axis=1))

    for _ in range(max_iter):
        dists = ((values[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        assign = dists.argmin(axis=1)
        new_centers = centers.copy()
        for j in range(k_eff):
            mask = assign == j
            total = counts[mask].sum()
            if total > 0:
                new_centers[j] = (values[mask] * counts[mask, None]).sum(axis=0) / total
        shift = np.abs(new_centers - centers).max()
        centers = new_centers
        if shift < tol:
            break

    dists = ((values[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    assign = dists.argmin(axis=1)
    member_counts = np.array([counts[assign == j].sum() for j in range(k_eff)], dtype=np.float64)
    keep = member_counts > 0
    return centers[keep], member_counts[keep]


def _softmax(x: np.ndarray) -> np.ndarray:
    e = np.exp(x - x.max())
    return e / e.sum()


def extract_color_clusters(pixels, k: int = NUM_COLOR_CLUSTERS, seed: int = 0) -> ColorClusters:
    """Cluster a pixel block into its k dominant colors.

    Clusters are ordered by descending pixel count. When fewer than k distinct
    clusters survive, centers are padded with (0, 0, 0) at count 0. Weights are
    the softmax of the count proportions (counts / total).
    """
    arr = _as_unit_rgb(pixels)
    values, counts = np.unique(arr, axis=0, return_counts=True)
    centers, member_counts = _weighted_kmeans(values, counts.astype(np.float64), k, seed)

    order = np.argsort(-member_counts, kind="stable")
    centers = centers[order]
    member_counts = member_counts[order]

    padded_centers = np.zeros((k, 3))
    padded_centers[: len(centers)] = centers
    proportions = np.zeros(k)
    proportions[: len(member_counts)] = member_counts / member_counts.sum()
    return ColorClusters(centers=padded_centers, weights=_softmax(proportions))


def discretize_color(pixels) -> ColorOneHot:
    """Map a pixel block to the nearest palette color.

    The top-3 dominant clusters (by count) are averaged, weighted by their
    counts, and the palette color with minimum RGB Euclidean distance wins.
    Gray is accepted only when the averaged color is genuinely achromatic
    (per-channel standard deviation below GRAY_CHANNEL_STD_MAX); otherwise the
    nearest non-gray color is used.
    """
    arr = _as_unit_rgb(pixels)
    values, counts = np.unique(arr, axis=0, return_counts=True)
    centers, member_counts = _weighted_kmeans(values, counts.astype(np.float64), NUM_COLOR_CLUSTERS, seed=0)

    order = np.argsort(-member_counts, kind="stable")[:3]
    top_centers = centers[order]
    top_counts = member_counts[order]
    mean_color = (top_centers * top_counts[:, None]).sum(axis=0) / top_counts.sum()

    dists = np.linalg.norm(PALETTE - mean_color, axis=1)
    nearest = int(dists.argmin())
    if nearest == GRAY_INDEX and mean_color.std() >= GRAY_CHANNEL_STD_MAX:
        dists[GRAY_INDEX] = np.inf
        nearest = int(dists.argmin())
    return ColorOneHot(nearest)


def clusters_from_rgb(rgb, weight_rest: float = 0.0) -> ColorClusters:
    """Build a single-dominant-color cluster feature from one RGB value.

    Used when a caller (simulator bridge, generation request) declares a color
    instead of providing pixels.
    """
    rgb = _as_unit_rgb([rgb])[0]
    centers = np.zeros((NUM_COLOR_CLUSTERS, 3))
    centers[0] = rgb
    proportions = np.zeros(NUM_COLOR_CLUSTERS)
    proportions[0] = 1.0
    return ColorClusters(centers=centers, weights=_softmax(proportions))
