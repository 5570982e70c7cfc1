"""Dataset construction and storage.

Turns (frame image, detections, timestamp) into training triples of
segmentation map, scene graph, and real image, and persists them losslessly:
PNG for images and label maps, JSON for graphs, plus a manifest.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np
from PIL import Image

from .colors import discretize_color, extract_color_clusters
from .errors import DatasetIOError, DomainError
from .scenegraph import (
    BBox,
    EntityClass,
    GraphVariant,
    LatticeSpec,
    SceneEntity,
    SceneGraph,
    build_scene_graph,
    encode_time,
    load_scene_graph,
    save_scene_graph,
)

MANIFEST_NAME = "manifest.json"
MANIFEST_VERSION = 1

# Label ids of the segmentation map. 0 is background; entity classes follow.
SEGMAP_CLASS_IDS: dict[EntityClass, int] = {
    EntityClass.BUS: 1,
    EntityClass.TRUCK: 2,
    EntityClass.CAR: 3,
    EntityClass.PERSON: 4,
}
SEGMAP_CLASS_NAMES = ("background", "bus", "truck", "car", "person")
NUM_SEGMAP_CLASSES = len(SEGMAP_CLASS_NAMES)


@dataclass
class Detection:
    """A detector output: class, normalized box, emission order, crop pixels.

    `crop_pixels` may be None when the source image is available; builders
    then crop the bbox region themselves.
    """

    entity_class: EntityClass
    bbox: BBox
    order_index: int
    crop_pixels: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.entity_class is EntityClass.GRID:
            raise DomainError("detections cannot use the grid class")


@dataclass
class SegmentationMap:
    """Per-pixel class labels in [0, 4]."""

    labels: np.ndarray  # (H, W) uint8

    def __post_init__(self) -> None:
        self.labels = np.asarray(self.labels)
        if self.labels.ndim != 2:
            raise DomainError("segmentation map must be 2-D")
        if self.labels.min(initial=0) < 0 or self.labels.max(initial=0) >= NUM_SEGMAP_CLASSES:
            raise DomainError("segmentation labels must be in [0, 4]")
        self.labels = self.labels.astype(np.uint8)

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    def one_hot(self) -> np.ndarray:
        """(num_classes, H, W) float32 one-hot encoding."""
        out = np.zeros((NUM_SEGMAP_CLASSES,) + self.labels.shape, dtype=np.float32)
        for c in range(NUM_SEGMAP_CLASSES):
            out[c] = self.labels == c
        return out


@dataclass
class DataPoint:
    """One training triple plus its timestamp."""

    segmap: SegmentationMap
    graph: SceneGraph
    image: np.ndarray  # (H, W, 3) uint8
    timestamp: float

    def __post_init__(self) -> None:
        self.image = np.asarray(self.image)
        if self.image.ndim != 3 or self.image.shape[2] != 3:
            raise DomainError("image must be (H, W, 3)")
        if self.image.shape[:2] != self.segmap.labels.shape:
            raise DomainError("segmentation map and image must share H x W")
        self.image = self.image.astype(np.uint8)


def bbox_pixel_rect(bbox: BBox, height: int, width: int) -> tuple[int, int, int, int]:
    """Map a normalized bbox to integer pixel bounds (y0, y1, x0, x1), clipped."""
    x0 = int(round((bbox.x - bbox.w / 2) * width))
    x1 = int(round((bbox.x + bbox.w / 2) * width))
    y0 = int(round((bbox.y - bbox.h / 2) * height))
    y1 = int(round((bbox.y + bbox.h / 2) * height))
    return (
        max(0, min(height, y0)),
        max(0, min(height, y1)),
        max(0, min(width, x0)),
        max(0, min(width, x1)),
    )


def rasterize_segmentation_map(
    detections: list[Detection], height: int, width: int
) -> SegmentationMap:
    """Paint detection boxes onto a background-zero label grid.

    Boxes are painted in ascending emission order, so later detections
    overwrite earlier ones wherever they overlap.
    """
    if height <= 0 or width <= 0:
        raise DomainError("height and width must be positive")
    orders = [d.order_index for d in detections]
    if len(set(orders)) != len(orders):
        raise DomainError("detection order_index values must be unique within a frame")

    labels = np.zeros((height, width), dtype=np.uint8)
    for det in sorted(detections, key=lambda d: d.order_index):
        y0, y1, x0, x1 = bbox_pixel_rect(det.bbox, height, width)
        labels[y0:y1, x0:x1] = SEGMAP_CLASS_IDS[det.entity_class]
    return SegmentationMap(labels)


def crop_region(image: np.ndarray, bbox: BBox) -> np.ndarray:
    """Extract the bbox pixel block from an image; empty crops are an error."""
    h, w = image.shape[:2]
    y0, y1, x0, x1 = bbox_pixel_rect(bbox, h, w)
    if y1 <= y0 or x1 <= x0:
        raise DomainError(f"detection crop lies outside the {w}x{h} image")
    return image[y0:y1, x0:x1]


def build_datapoint(
    image: np.ndarray,
    detections: list[Detection],
    timestamp: float,
    spec: LatticeSpec,
    variant: GraphVariant,
    seed: int = 0,
) -> DataPoint:
    """Compose segmentation map + scene graph + image into one DataPoint.

    Entity color features are computed from each detection's crop (taken from
    the image when the detection does not carry pixels). Deterministic given
    (image, detections, timestamp, seed).
    """
    image = np.asarray(image)
    height, width = image.shape[:2]
    segmap = rasterize_segmentation_map(detections, height, width)

    entities = []
    for det in sorted(detections, key=lambda d: d.order_index):
        crop = det.crop_pixels if det.crop_pixels is not None else crop_region(image, det.bbox)
        pixels = np.asarray(crop).reshape(-1, 3)
        if variant is GraphVariant.CLUSTER:
            color = extract_color_clusters(pixels, seed=seed + det.order_index)
        else:
            color = discretize_color(pixels)
        entities.append(SceneEntity(det.entity_class, det.bbox, color))

    graph = build_scene_graph(entities, encode_time(timestamp), spec, variant)
    return DataPoint(segmap=segmap, graph=graph, image=image, timestamp=timestamp)


# --- storage ----------------------------------------------------------------


def write_dataset(
    points: Iterable[DataPoint],
    root: str | Path,
    splits: list[str] | None = None,
) -> dict:
    """Persist points under `root` and return the manifest written there.

    Layout: images/NNNNNN.png (RGB), segmaps/NNNNNN.png (single channel),
    graphs/NNNNNN.json, manifest.json. `splits`, when given, assigns each
    point to a named split ("train"/"test"); default is "train".
    """
    root = Path(root)
    for sub in ("images", "segmaps", "graphs"):
        (root / sub).mkdir(parents=True, exist_ok=True)

    entries = []
    variant = None
    lattice = None
    for i, point in enumerate(points):
        name = f"{i:06d}"
        image_rel = f"images/{name}.png"
        segmap_rel = f"segmaps/{name}.png"
        graph_rel = f"graphs/{name}.json"
        Image.fromarray(point.image, "RGB").save(root / image_rel)
        Image.fromarray(point.segmap.labels, "L").save(root / segmap_rel)
        save_scene_graph(point.graph, root / graph_rel)
        if variant is None:
            variant = point.graph.variant
            lattice = point.graph.lattice
        elif point.graph.variant is not variant:
            raise DomainError("all points in a dataset must share one graph variant")
        if splits is not None and i >= len(splits):
            raise DomainError("splits must assign exactly one split per point")
        entries.append(
            {
                "id": name,
                "image": image_rel,
                "segmap": segmap_rel,
                "graph": graph_rel,
                "timestamp": point.timestamp,
                "split": splits[i] if splits is not None else "train",
            }
        )

    if splits is not None and len(splits) != len(entries):
        raise DomainError("splits must assign exactly one split per point")

    split_counts: dict[str, int] = {}
    for e in entries:
        split_counts[e["split"]] = split_counts.get(e["split"], 0) + 1

    manifest = {
        "version": MANIFEST_VERSION,
        "count": len(entries),
        "variant": variant.value if variant else None,
        "lattice": (
            {
                "rows": lattice.rows,
                "cols": lattice.cols,
                "radius": lattice.connect_radius_hops,
            }
            if lattice
            else None
        ),
        "split_counts": split_counts,
        "points": entries,
    }
    (root / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2))
    return manifest


def load_manifest(root: str | Path) -> dict:
    path = Path(root) / MANIFEST_NAME
    if not path.exists():
        raise DatasetIOError(f"manifest not found: {path}")
    try:
        manifest = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DatasetIOError(f"corrupt manifest {path}: {exc}") from exc
    if manifest.get("count") != len(manifest.get("points", [])):
        raise DatasetIOError(
            f"corrupt manifest {path}: count {manifest.get('count')} does not match "
            f"{len(manifest.get('points', []))} point entries"
        )
    return manifest


def read_dataset(root: str | Path, split: str | None = None) -> Iterator[DataPoint]:
    """Stream DataPoints back from disk; exact inverse of write_dataset."""
    root = Path(root)
    manifest = load_manifest(root)
    for entry in manifest["points"]:
        if split is not None and entry.get("split") != split:
            continue
        image_path = root / entry["image"]
        segmap_path = root / entry["segmap"]
        graph_path = root / entry["graph"]
        for p in (image_path, segmap_path, graph_path):
            if not p.exists():
                raise DatasetIOError(f"dataset file missing: {p}")
        image = np.asarray(Image.open(image_path).convert("RGB"))
        labels = np.asarray(Image.open(segmap_path))
        graph = load_scene_graph(graph_path)
        yield DataPoint(
            segmap=SegmentationMap(labels),
            graph=graph,
            image=image,
            timestamp=float(entry["timestamp"]),
        )
