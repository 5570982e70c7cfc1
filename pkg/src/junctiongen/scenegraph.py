"""Scene graph construction.

A scene is encoded as a graph with two node populations: a regular lattice of
grid nodes covering the image frame, and one node per detected/placed entity.
Entity nodes connect bidirectionally to every grid node within a configurable
hop radius of their bounding-box center. Every node carries a fixed-layout
feature vector: bbox (4) | class one-hot (5) | time sin/cos (2) | color
(20 cluster variant, 8 discrete variant), total width 31 or 19.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .colors import (
    CLUSTER_FEATURE_DIM,
    DISCRETE_FEATURE_DIM,
    ColorClusters,
    ColorFeature,
    ColorOneHot,
)
from .errors import DomainError

SECONDS_PER_DAY = 86400.0


class EntityClass(enum.Enum):
    BUS = "bus"
    TRUCK = "truck"
    CAR = "car"
    PERSON = "person"
    GRID = "grid"

    def one_hot(self) -> np.ndarray:
        v = np.zeros(len(CLASS_ORDER))
        v[CLASS_ORDER.index(self)] = 1.0
        return v


# One-hot slot order of the class section of the feature vector.
CLASS_ORDER = [
    EntityClass.BUS,
    EntityClass.TRUCK,
    EntityClass.CAR,
    EntityClass.PERSON,
    EntityClass.GRID,
]


class GraphVariant(enum.Enum):
    CLUSTER = "cluster"
    DISCRETE = "discrete"

    @property
    def color_dim(self) -> int:
        return CLUSTER_FEATURE_DIM if self is GraphVariant.CLUSTER else DISCRETE_FEATURE_DIM

    @property
    def feature_width(self) -> int:
        return BBOX_DIM + CLASS_DIM + TIME_DIM + self.color_dim


BBOX_DIM = 4
CLASS_DIM = 5
TIME_DIM = 2

# Slices of the node feature vector, shared by both variants.
BBOX_SLICE = slice(0, 4)
CLASS_SLICE = slice(4, 9)
TIME_SLICE = slice(9, 11)
COLOR_START = 11


@dataclass
class TimeEncoding:
    """Time of day on the unit circle: (sin, cos) of 2*pi*seconds/86400."""

    sin_component: float
    cos_component: float

    def __post_init__(self) -> None:
        norm = self.sin_component**2 + self.cos_component**2
        if abs(norm - 1.0) > 1e-9:
            raise DomainError(f"time encoding must lie on the unit circle, |v|^2={norm!r}")

    def vector(self) -> np.ndarray:
        return np.array([self.sin_component, self.cos_component])


def encode_time(seconds_since_midnight: float) -> TimeEncoding:
    """Encode a time of day as (sin, cos) of its fraction of the day."""
    if not 0 <= seconds_since_midnight < SECONDS_PER_DAY:
        raise DomainError(
            f"seconds_since_midnight must be in [0, 86400), got {seconds_since_midnight}"
        )
    theta = 2.0 * math.pi * seconds_since_midnight / SECONDS_PER_DAY
    return TimeEncoding(math.sin(theta), math.cos(theta))


@dataclass
class BBox:
    """Axis-aligned box with center (x, y) and size (w, h), all normalized."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        for name in ("x", "y", "w", "h"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"bbox.{name}={v} outside [0, 1]")
        if self.w <= 0 or self.h <= 0:
            raise DomainError("bbox width and height must be positive")

    @property
    def center(self) -> tuple[float, float]:
        return (self.x, self.y)

    def vector(self) -> np.ndarray:
        return np.array([self.x, self.y, self.w, self.h])


@dataclass
class SceneEntity:
    """One placed or detected object: class, box, and color feature."""

    entity_class: EntityClass
    bbox: BBox
    color: ColorFeature

    def __post_init__(self) -> None:
        if self.entity_class is EntityClass.GRID:
            raise DomainError("scene entities cannot use the grid class")


@dataclass
class LatticeSpec:
    """Grid resolution and the entity-to-grid connection radius (in hops)."""

    rows: int
    cols: int
    connect_radius_hops: int = 1

    def __post_init__(self) -> None:
        if self.rows < 2 or self.cols < 2:
            raise DomainError(f"lattice must be at least 2x2, got {self.rows}x{self.cols}")
        if self.connect_radius_hops < 1:
            raise DomainError("connect_radius_hops must be a positive integer")

    @property
    def spacing(self) -> tuple[float, float]:
        """(horizontal, vertical) distance between adjacent grid nodes."""
        return (1.0 / (self.cols - 1), 1.0 / (self.rows - 1))

    @property
    def connect_radius(self) -> float:
        """Euclidean radius in normalized coordinates for entity-grid edges."""
        return self.connect_radius_hops * max(self.spacing)


def variant_of_color(color: ColorFeature) -> GraphVariant:
    return GraphVariant.CLUSTER if isinstance(color, ColorClusters) else GraphVariant.DISCRETE


@dataclass
class SceneGraph:
    """Lattice + entity nodes with per-node features and edge list.

    Grid nodes occupy indices [0, rows*cols) in row-major order; entity nodes
    follow. Edges are directed index pairs; every undirected link is stored in
    both directions.
    """

    variant: GraphVariant
    lattice: LatticeSpec
    node_features: np.ndarray  # (N, F)
    node_kinds: list[EntityClass]
    node_positions: np.ndarray  # (N, 2)
    edges: np.ndarray  # (E, 2) int
    lattice_index: dict[tuple[int, int], int] = field(repr=False)

    def __post_init__(self) -> None:
        self.node_features = np.asarray(self.node_features, dtype=np.float64)
        self.node_positions = np.asarray(self.node_positions, dtype=np.float64)
        self.edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        n, f = self.node_features.shape
        if f != self.variant.feature_width:
            raise DomainError(
                f"feature width {f} does not match variant {self.variant.value} "
                f"(expected {self.variant.feature_width})"
            )
        if len(self.node_kinds) != n or self.node_positions.shape != (n, 2):
            raise DomainError("node arrays disagree on node count")
        expected = self.lattice.rows * self.lattice.cols
        if len(self.lattice_index) != expected or len(set(self.lattice_index.values())) != expected:
            raise DomainError("lattice_index must cover exactly rows*cols distinct nodes")

    @property
    def num_nodes(self) -> int:
        return self.node_features.shape[0]

    @property
    def feature_width(self) -> int:
        return self.node_features.shape[1]

    @property
    def num_grid_nodes(self) -> int:
        return self.lattice.rows * self.lattice.cols

    def entity_indices(self) -> list[int]:
        return [i for i, k in enumerate(self.node_kinds) if k is not EntityClass.GRID]


def build_lattice(spec: LatticeSpec, variant: GraphVariant = GraphVariant.CLUSTER) -> SceneGraph:
    """Build the grid-only graph: rows*cols nodes, 4-neighborhood links.

    Grid positions cover [0, 1]^2 uniformly. Grid features carry the node's
    position and one cell's extent as the bbox slots and the grid class
    one-hot; time and color slots stay zero until graph assembly stamps them.
    """
    rows, cols = spec.rows, spec.cols
    dx, dy = spec.spacing
    n = rows * cols
    width = variant.feature_width

    features = np.zeros((n, width))
    positions = np.zeros((n, 2))
    lattice_index: dict[tuple[int, int], int] = {}
    grid_onehot = EntityClass.GRID.one_hot()

    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            x, y = c * dx, r * dy
            lattice_index[(r, c)] = i
            positions[i] = (x, y)
            features[i, BBOX_SLICE] = (x, y, dx, dy)
            features[i, CLASS_SLICE] = grid_onehot

    edges: list[tuple[int, int]] = []
    for r in range(rows):
        for c in range(cols):
            i = lattice_index[(r, c)]
            if c + 1 < cols:
                j = lattice_index[(r, c + 1)]
                edges.extend([(i, j), (j, i)])
            if r + 1 < rows:
                j = lattice_index[(r + 1, c)]
                edges.extend([(i, j), (j, i)])

    return SceneGraph(
        variant=variant,
        lattice=spec,
        node_features=features,
        node_kinds=[EntityClass.GRID] * n,
        node_positions=positions,
        edges=np.array(edges, dtype=np.int64).reshape(-1, 2),
        lattice_index=lattice_index,
    )


def build_scene_graph(
    entities: list[SceneEntity],
    time: TimeEncoding,
    spec: LatticeSpec,
    variant: GraphVariant,
) -> SceneGraph:
    """Assemble the full lattice + entity graph.

    Each entity node is connected in both directions to every grid node whose
    Euclidean distance from the entity's bbox center is at most
    `connect_radius_hops * max(grid spacings)`. All nodes, grid included,
    carry the same time encoding.
    """
    for e in entities:
        if variant_of_color(e.color) is not variant:
            raise DomainError(
                f"entity color feature does not match graph variant {variant.value!r}"
            )

    base = build_lattice(spec, variant)
    n_grid = base.num_grid_nodes
    n_total = n_grid + len(entities)
    width = variant.feature_width

    features = np.zeros((n_total, width))
    features[:n_grid] = base.node_features
    features[:, TIME_SLICE] = time.vector()

    positions = np.zeros((n_total, 2))
    positions[:n_grid] = base.node_positions
    kinds = list(base.node_kinds)

    edges = [tuple(e) for e in base.edges]
    radius = spec.connect_radius
    grid_positions = base.node_positions

    for k, entity in enumerate(entities):
        i = n_grid + k
        cx, cy = entity.bbox.center
        positions[i] = (cx, cy)
        kinds.append(entity.entity_class)
        features[i, BBOX_SLICE] = entity.bbox.vector()
        features[i, CLASS_SLICE] = entity.entity_class.one_hot()
        features[i, COLOR_START:] = entity.color.vector()

        dists = np.linalg.norm(grid_positions - (cx, cy), axis=1)
        for g in np.nonzero(dists <= radius)[0]:
            edges.extend([(i, int(g)), (int(g), i)])

    return SceneGraph(
        variant=variant,
        lattice=spec,
        node_features=features,
        node_kinds=kinds,
        node_positions=positions,
        edges=np.array(edges, dtype=np.int64).reshape(-1, 2),
        lattice_index=dict(base.lattice_index),
    )


# --- serialization ----------------------------------------------------------
# Canonical on-disk format:
# {variant, lattice: {rows, cols, radius}, nodes: [{kind, position, features}],
#  edges: [[i, j], ...]}


def scene_graph_to_dict(graph: SceneGraph) -> dict:
    return {
        "variant": graph.variant.value,
        "lattice": {
            "rows": graph.lattice.rows,
            "cols": graph.lattice.cols,
            "radius": graph.lattice.connect_radius_hops,
        },
        "nodes": [
            {
                "kind": graph.node_kinds[i].value,
                "position": [float(v) for v in graph.node_positions[i]],
                "features": [float(v) for v in graph.node_features[i]],
            }
            for i in range(graph.num_nodes)
        ],
        "edges": [[int(i), int(j)] for i, j in graph.edges],
    }


def scene_graph_from_dict(data: dict) -> SceneGraph:
    try:
        variant = GraphVariant(data["variant"])
        lat = data["lattice"]
        spec = LatticeSpec(int(lat["rows"]), int(lat["cols"]), int(lat["radius"]))
        nodes = data["nodes"]
        kinds = [EntityClass(n["kind"]) for n in nodes]
        positions = np.array([n["position"] for n in nodes], dtype=np.float64).reshape(-1, 2)
        features = np.array([n["features"] for n in nodes], dtype=np.float64)
        edges = np.array(data["edges"], dtype=np.int64).reshape(-1, 2)
    except (KeyError, ValueError, TypeError) as exc:
        raise DomainError(f"malformed scene graph payload: {exc}") from exc

    # Grid nodes are serialized first in row-major order.
    n_grid = spec.rows * spec.cols
    if any(k is not EntityClass.GRID for k in kinds[:n_grid]):
        raise DomainError("scene graph payload must store grid nodes first, row-major")
    lattice_index = {
        (r, c): r * spec.cols + c for r in range(spec.rows) for c in range(spec.cols)
    }
    return SceneGraph(
        variant=variant,
        lattice=spec,
        node_features=features,
        node_kinds=kinds,
        node_positions=positions,
        edges=edges,
        lattice_index=lattice_index,
    )


def save_scene_graph(graph: SceneGraph, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scene_graph_to_dict(graph)))


def load_scene_graph(path: str | Path) -> SceneGraph:
    return scene_graph_from_dict(json.loads(Path(path).read_text()))


def declared_color_feature(color, variant: GraphVariant) -> ColorFeature:
    """Build the color feature for a caller-declared color.

    `color` is either a palette name or an RGB triple (unit range or 8-bit).
    Discrete variant maps to the nearest palette slot; cluster variant builds
    a single-dominant-color cluster set.
    """
    from .colors import PALETTE, PALETTE_NAMES, clusters_from_rgb, discretize_color

    if isinstance(color, str):
        if color not in PALETTE_NAMES:
            raise DomainError(
                f"unknown palette color {color!r}; choose one of {PALETTE_NAMES}"
            )
        if variant is GraphVariant.DISCRETE:
            return ColorOneHot.from_name(color)
        return clusters_from_rgb(PALETTE[PALETTE_NAMES.index(color)])
    rgb = np.asarray(color, dtype=np.float64)
    if rgb.shape != (3,):
        raise DomainError(f"RGB color must have 3 components, got {rgb.shape}")
    if variant is GraphVariant.DISCRETE:
        return discretize_color(rgb.reshape(1, 3))
    return clusters_from_rgb(rgb)
