"""Deterministic synthetic scenes for smoke tests and desk-scale training.

Images are procedurally drawn (time-dependent background brightness, entity
boxes filled with palette colors plus speckle) so color extraction and the
full training loop can run without any real footage.
"""
from __future__ import annotations

import numpy as np

from .colors import PALETTE, PALETTE_NAMES
from .config import Config
from .dataset import DataPoint, Detection, bbox_pixel_rect, build_datapoint
from .scenegraph import SECONDS_PER_DAY, BBox, EntityClass

_SYNTH_CLASSES = (EntityClass.BUS, EntityClass.TRUCK, EntityClass.CAR, EntityClass.PERSON)


def make_synthetic_points(
    count: int, config: Config, seed: int = 0, max_entities: int = 3
) -> list[DataPoint]:
    rng = np.random.default_rng(seed)
    height, width = config.image_hw
    points = []
    for i in range(count):
        timestamp = float(rng.uniform(0.0, SECONDS_PER_DAY))
        brightness = 0.35 + 0.4 * (1.0 + np.sin(2.0 * np.pi * timestamp / SECONDS_PER_DAY)) / 2.0
        gradient = np.linspace(0.6, 1.0, height)[:, None, None]
        image = (gradient * brightness * 255.0 * np.ones((height, width, 3))).astype(np.uint8)

        detections = []
        for j in range(int(rng.integers(1, max_entities + 1))):
            cls = _SYNTH_CLASSES[int(rng.integers(len(_SYNTH_CLASSES)))]
            w = float(rng.uniform(0.15, 0.3))
            h = float(rng.uniform(0.15, 0.3))
            cx = float(rng.uniform(w / 2, 1.0 - w / 2))
            cy = float(rng.uniform(h / 2, 1.0 - h / 2))
            bbox = BBox(x=cx, y=cy, w=w, h=h)
            color = PALETTE[int(rng.integers(len(PALETTE_NAMES)))]
            y0, y1, x0, x1 = bbox_pixel_rect(bbox, height, width)
            patch = np.clip(
                color * 255.0 + rng.normal(0.0, 8.0, (y1 - y0, x1 - x0, 3)), 0, 255
            )
            image[y0:y1, x0:x1] = patch.astype(np.uint8)
            detections.append(Detection(entity_class=cls, bbox=bbox, order_index=j))

        points.append(
            build_datapoint(
                image,
                detections,
                timestamp,
                config.model.lattice,
                config.model.variant,
                seed=seed + i,
            )
        )
    return points
