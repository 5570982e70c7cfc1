"""Shared fixtures-by-hand: random scene builders and brute-force oracles.

The oracles here are deliberately written as plain elementwise loops or
set-enumeration so the production implementations are checked against
independent code paths.
"""
from __future__ import annotations

import numpy as np

from junctiongen.colors import ColorClusters, ColorOneHot
from junctiongen.dataset import Detection, SEGMAP_CLASS_IDS
from junctiongen.scenegraph import (
    BBox,
    EntityClass,
    GraphVariant,
    LatticeSpec,
    SceneEntity,
)

ENTITY_CLASSES = (EntityClass.BUS, EntityClass.TRUCK, EntityClass.CAR, EntityClass.PERSON)


def random_bbox(rng: np.random.Generator) -> BBox:
    w = float(rng.uniform(0.05, 0.4))
    h = float(rng.uniform(0.05, 0.4))
    return BBox(
        x=float(rng.uniform(0.0, 1.0)),
        y=float(rng.uniform(0.0, 1.0)),
        w=w,
        h=h,
    )


def random_color(rng: np.random.Generator, variant: GraphVariant):
    if variant is GraphVariant.DISCRETE:
        return ColorOneHot(int(rng.integers(8)))
    k = int(rng.integers(1, 6))
    centers = np.zeros((5, 3))
    centers[:k] = rng.uniform(0.0, 1.0, (k, 3))
    proportions = np.zeros(5)
    proportions[:k] = rng.uniform(0.1, 1.0, k)
    proportions /= proportions.sum()
    e = np.exp(proportions - proportions.max())
    return ColorClusters(centers=centers, weights=e / e.sum())


def random_entities(
    rng: np.random.Generator, variant: GraphVariant, n: int
) -> list[SceneEntity]:
    return [
        SceneEntity(
            entity_class=ENTITY_CLASSES[int(rng.integers(len(ENTITY_CLASSES)))],
            bbox=random_bbox(rng),
            color=random_color(rng, variant),
        )
        for _ in range(n)
    ]


def random_detections(rng: np.random.Generator, n: int) -> list[Detection]:
    order = rng.permutation(n)
    return [
        Detection(
            entity_class=ENTITY_CLASSES[int(rng.integers(len(ENTITY_CLASSES)))],
            bbox=random_bbox(rng),
            order_index=int(order[i]),
        )
        for i in range(n)
    ]


def brute_force_entity_edges(
    entities: list[SceneEntity], spec: LatticeSpec
) -> set[tuple[int, int]]:
    """Expected entity<->grid edge set by direct radius enumeration."""
    n_grid = spec.rows * spec.cols
    sx, sy = spec.spacing
    radius = spec.connect_radius_hops * max(sx, sy)
    edges = set()
    for k, entity in enumerate(entities):
        e_idx = n_grid + k
        cx, cy = entity.bbox.x, entity.bbox.y
        for r in range(spec.rows):
            for c in range(spec.cols):
                gx = c * sx
                gy = r * sy
                if ((gx - cx) ** 2 + (gy - cy) ** 2) ** 0.5 <= radius:
                    g_idx = r * spec.cols + c
                    edges.add((e_idx, g_idx))
                    edges.add((g_idx, e_idx))
    return edges


def brute_force_rasterize(
    detections: list[Detection], height: int, width: int
) -> np.ndarray:
    """Per-pixel oracle: each pixel takes the class of the latest box covering it."""
    labels = np.zeros((height, width), dtype=np.uint8)
    for y in range(height):
        for x in range(width):
            best_order = None
            best_class = 0
            for det in detections:
                x0 = int(round((det.bbox.x - det.bbox.w / 2) * width))
                x1 = int(round((det.bbox.x + det.bbox.w / 2) * width))
                y0 = int(round((det.bbox.y - det.bbox.h / 2) * height))
                y1 = int(round((det.bbox.y + det.bbox.h / 2) * height))
                if x0 <= x < x1 and y0 <= y < y1:
                    if best_order is None or det.order_index > best_order:
                        best_order = det.order_index
                        best_class = SEGMAP_CLASS_IDS[det.entity_class]
            labels[y, x] = best_class
    return labels


def eq1_oracle(
    h: np.ndarray, gamma: np.ndarray, beta: np.ndarray, eps: float = 1e-5
) -> np.ndarray:
    """Elementwise re-implementation of the modulated normalization formula."""
    n, c, hh, ww = h.shape
    out = np.zeros_like(h)
    for ci in range(c):
        vals = [h[ni, ci, yi, xi] for ni in range(n) for yi in range(hh) for xi in range(ww)]
        mu = sum(vals) / len(vals)
        var = sum((v - mu) ** 2 for v in vals) / len(vals)
        sigma = max(var**0.5, eps)
        for ni in range(n):
            for yi in range(hh):
                for xi in range(ww):
                    out[ni, ci, yi, xi] = (
                        gamma[ni, ci, yi, xi] * (h[ni, ci, yi, xi] - mu) / sigma
                        + beta[ni, ci, yi, xi]
                    )
    return out
