"""Simulator-to-image mapping: lane splines, waypoints, and bbox histograms.

Traffic lanes in the junction image are natural cubic splines through
hand-picked control points (normalized [0,1] image coordinates). Waypoint
pairs tie 1-D simulator lane offsets (meters) to normalized arclength along
the spline; vehicle positions are mapped by piecewise-linear interpolation
between waypoints, then spline evaluation. Bounding-box sizes come from a
spatial histogram of training detections.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicSpline

from .errors import DatasetIOError, DomainError
from .scenegraph import (
    BBox,
    EntityClass,
    GraphVariant,
    SceneEntity,
    TimeEncoding,
    declared_color_feature,
    encode_time,
)

ARC_SAMPLES_PER_SEGMENT = 128
MIN_ARC_SAMPLES = 512
NOON_SECONDS = 43200.0


@dataclass
class LaneSpline:
    """Natural cubic spline through ordered control points, chord-parameterized."""

    lane_id: str
    control_points: np.ndarray  # (N, 2) normalized image coordinates
    spline: CubicSpline = field(repr=False)
    knots: np.ndarray = field(repr=False)  # chord-length parameter at control points
    arc_params: np.ndarray = field(repr=False)  # dense parameter grid
    arc_lengths: np.ndarray = field(repr=False)  # cumulative arclength on that grid

    @property
    def total_length(self) -> float:
        return float(self.arc_lengths[-1])

    def point_at_param(self, t: float | np.ndarray) -> np.ndarray:
        return self.spline(t)

    def point_at_arclength(self, s: float) -> np.ndarray:
        t = np.interp(s, self.arc_lengths, self.arc_params)
        return self.spline(t)

    def point_at_fraction(self, u: float) -> np.ndarray:
        """Evaluate at normalized arclength u in [0, 1] (clamped)."""
        return self.point_at_arclength(u * self.total_length)


def fit_lane_spline(points: np.ndarray | list, lane_id: str = "lane") -> LaneSpline:
    """Fit a natural cubic spline through >= 4 distinct ordered points."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise DomainError(f"control points must be (N, 2), got {pts.shape}")
    if pts.shape[0] < 4:
        raise DomainError(f"need at least 4 control points, got {pts.shape[0]}")
    if len(np.unique(pts, axis=0)) != pts.shape[0]:
        raise DomainError("duplicate control points")

    chords = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    knots = np.concatenate([[0.0], np.cumsum(chords)])
    spline = CubicSpline(knots, pts, bc_type="natural", axis=0)

    n = max(MIN_ARC_SAMPLES, ARC_SAMPLES_PER_SEGMENT * (pts.shape[0] - 1))
    ts = np.linspace(knots[0], knots[-1], n + 1)
    speed = np.linalg.norm(spline.derivative()(ts), axis=1)
    arcs = np.concatenate([[0.0], cumulative_trapezoid(speed, ts)])
    return LaneSpline(lane_id, pts, spline, knots, ts, arcs)


@dataclass(frozen=True)
class WaypointPair:
    """Tie between a simulator lane offset and a normalized spline arclength."""

    sim_offset: float  # meters along the simulator lane
    image_arclength: float  # fraction of spline length in [0, 1]

    def __post_init__(self) -> None:
        if not 0.0 <= self.image_arclength <= 1.0:
            raise DomainError(
                f"image_arclength must lie in [0, 1], got {self.image_arclength}"
            )


@dataclass
class LaneCorrespondence:
    lanes: dict[str, tuple[LaneSpline, list[WaypointPair]]]

    def __post_init__(self) -> None:
        for lane_id, (_, pairs) in self.lanes.items():
            if len(pairs) < 2:
                raise DomainError(f"lane {lane_id!r} needs >= 2 waypoint pairs")
            offsets = [p.sim_offset for p in pairs]
            arcs = [p.image_arclength for p in pairs]
            if any(b <= a for a, b in zip(offsets, offsets[1:])) or any(
                b <= a for a, b in zip(arcs, arcs[1:])
            ):
                raise DomainError(
                    f"lane {lane_id!r} waypoints must be strictly increasing in "
                    "both sim_offset and image_arclength"
                )


def map_lane_position(
    corr: LaneCorrespondence, lane_id: str, sim_offset: float
) -> np.ndarray:
    """Map a simulator offset to a normalized image point; clamps outside span."""
    if lane_id not in corr.lanes:
        raise DomainError(f"unknown lane {lane_id!r}")
    spline, pairs = corr.lanes[lane_id]
    offsets = np.array([p.sim_offset for p in pairs])
    arcs = np.array([p.image_arclength for p in pairs])
    u = np.interp(sim_offset, offsets, arcs)
    return spline.point_at_fraction(float(u))


def save_lane_correspondence(corr: LaneCorrespondence, path: str | Path) -> None:
    data = {
        "lanes": {
            lane_id: {
                "control_points": spline.control_points.tolist(),
                "waypoints": [
                    {"sim_offset": p.sim_offset, "image_arclength": p.image_arclength}
                    for p in pairs
                ],
            }
            for lane_id, (spline, pairs) in corr.lanes.items()
        }
    }
    Path(path).write_text(json.dumps(data, indent=2))


def load_lane_correspondence(path: str | Path) -> LaneCorrespondence:
    path = Path(path)
    if not path.exists():
        raise DatasetIOError(f"lane correspondence file not found: {path}")
    try:
        data = json.loads(path.read_text())
        lanes = {}
        for lane_id, entry in data["lanes"].items():
            spline = fit_lane_spline(entry["control_points"], lane_id)
            pairs = [
                WaypointPair(float(w["sim_offset"]), float(w["image_arclength"]))
                for w in entry["waypoints"]
            ]
            lanes[lane_id] = (spline, pairs)
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise DatasetIOError(f"malformed lane correspondence file {path}: {exc}") from exc
    return LaneCorrespondence(lanes)


class BBoxHistogram:
    """Per-class empirical (w, h) distributions over a spatial grid of bins."""

    def __init__(self, bins: int = 8):
        if bins < 1:
            raise DomainError(f"bins must be >= 1, got {bins}")
        self.bins = bins
        self._sizes: dict[EntityClass, list[list[list[tuple[float, float]]]]] = {}

    @classmethod
    def fit(
        cls, detections: list[tuple[EntityClass, BBox]], bins: int = 8
    ) -> "BBoxHistogram":
        hist = cls(bins)
        for entity_class, bbox in detections:
            cx, cy = bbox.center
            bx = min(int(cx * bins), bins - 1)
            by = min(int(cy * bins), bins - 1)
            grid = hist._sizes.setdefault(
                entity_class, [[[] for _ in range(bins)] for _ in range(bins)]
            )
            grid[by][bx].append((bbox.w, bbox.h))
        return hist

    def _bin_of(self, point: np.ndarray) -> tuple[int, int]:
        x, y = float(point[0]), float(point[1])
        if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
            raise DomainError(f"point {(x, y)} outside the unit image frame")
        return (
            min(int(y * self.bins), self.bins - 1),
            min(int(x * self.bins), self.bins - 1),
        )

    def sizes_for(
        self, point: np.ndarray, entity_class: EntityClass
    ) -> list[tuple[float, float]]:
        """Sizes in the point's bin, falling back to the 8-neighborhood, then
        to the class-global distribution."""
        grid = self._sizes.get(entity_class)
        if grid is None:
            raise DomainError(f"no detections recorded for class {entity_class.value}")
        by, bx = self._bin_of(point)
        sizes = list(grid[by][bx])
        if not sizes:
            for dy in (-1, 0, 1):
                for dx in (-1, 0, 1):
                    if dy == 0 and dx == 0:
                        continue
                    ny, nx = by + dy, bx + dx
                    if 0 <= ny < self.bins and 0 <= nx < self.bins:
                        sizes.extend(grid[ny][nx])
        if not sizes:
            sizes = [s for row in grid for cell in row for s in cell]
        if not sizes:
            raise DomainError(
                f"no bbox sizes available for class {entity_class.value} after fallback"
            )
        return sorted(sizes)


def sample_bbox(
    hist: BBoxHistogram,
    point: np.ndarray,
    entity_class: EntityClass,
    seed: int = 0,
    deterministic: bool = True,
) -> BBox:
    """Draw a (w, h) for the bin containing the point; center the box there.

    Deterministic mode takes the componentwise median; otherwise a seeded
    uniform draw over the recorded sizes. The box is clipped to [0, 1].
    """
    sizes = hist.sizes_for(point, entity_class)
    if deterministic:
        arr = np.array(sizes)
        w, h = float(np.median(arr[:, 0])), float(np.median(arr[:, 1]))
    else:
        rng = np.random.default_rng(seed)
        w, h = sizes[int(rng.integers(len(sizes)))]
    cx, cy = float(point[0]), float(point[1])
    # Clip the box extent to the unit frame; the center shifts if it spills.
    x0 = min(max(cx - w / 2, 0.0), 1.0)
    y0 = min(max(cy - h / 2, 0.0), 1.0)
    x1 = min(max(cx + w / 2, 0.0), 1.0)
    y1 = min(max(cy + h / 2, 0.0), 1.0)
    if x1 <= x0 or y1 <= y0:
        raise DomainError(f"bbox degenerate after clipping at point {(cx, cy)}")
    return BBox(x=(x0 + x1) / 2, y=(y0 + y1) / 2, w=x1 - x0, h=y1 - y0)


def histogram_from_graphs(graphs, bins: int = 8) -> BBoxHistogram:
    """Fit a size histogram from the entity nodes of stored scene graphs."""
    from .scenegraph import BBOX_SLICE

    detections = []
    for g in graphs:
        for i, kind in enumerate(g.node_kinds):
            if kind is EntityClass.GRID:
                continue
            x, y, w, h = (float(v) for v in g.node_features[i][BBOX_SLICE])
            detections.append((kind, BBox(x=x, y=y, w=w, h=h)))
    return BBoxHistogram.fit(detections, bins)


def histogram_from_sizes(
    sizes: dict[str, list[tuple[float, float]]], bins: int = 8
) -> BBoxHistogram:
    """Fit a histogram from bare per-class (w, h) lists; boxes are placed at
    the image center, so lookups elsewhere resolve via the global fallback."""
    detections = []
    for name, pairs in sizes.items():
        if name not in _CLASS_BY_NAME:
            raise DomainError(
                f"unknown entity class {name!r}; choose one of {sorted(_CLASS_BY_NAME)}"
            )
        for w, h in pairs:
            detections.append(
                (_CLASS_BY_NAME[name], BBox(x=0.5, y=0.5, w=float(w), h=float(h)))
            )
    return BBoxHistogram.fit(detections, bins)


@dataclass(frozen=True)
class SimVehicleState:
    lane_id: str
    offset: float  # meters along the simulator lane
    entity_class: EntityClass
    color: str | tuple[float, float, float]  # palette name or RGB triple
    timestamp: float | None = None  # seconds since midnight


def sim_frame_to_scene(
    states: list[SimVehicleState],
    corr: LaneCorrespondence,
    hist: BBoxHistogram,
    variant: GraphVariant = GraphVariant.DISCRETE,
    timestamp: float | None = None,
    seed: int = 0,
    deterministic: bool = True,
) -> tuple[list[SceneEntity], TimeEncoding, list[tuple[int, str]]]:
    """Convert one simulator frame to scene entities plus a time encoding.

    Per-vehicle failures are collected as (index, message) and never abort the
    rest of the frame.
    """
    entities: list[SceneEntity] = []
    errors: list[tuple[int, str]] = []
    frame_time = timestamp
    for i, state in enumerate(states):
        if frame_time is None and state.timestamp is not None:
            frame_time = state.timestamp
        try:
            point = map_lane_position(corr, state.lane_id, state.offset)
            bbox = sample_bbox(
                hist, point, state.entity_class, seed=seed + i, deterministic=deterministic
            )
            color = declared_color_feature(state.color, variant)
            entities.append(
                SceneEntity(entity_class=state.entity_class, bbox=bbox, color=color)
            )
        except DomainError as exc:
            errors.append((i, str(exc)))
    time = encode_time(NOON_SECONDS if frame_time is None else frame_time)
    return entities, time, errors


_CLASS_BY_NAME = {c.value: c for c in EntityClass if c is not EntityClass.GRID}


def load_sim_frame(path: str | Path) -> tuple[list[SimVehicleState], float | None]:
    """Read a frame snapshot: either a bare JSON list of vehicle states or an
    object {"timestamp": seconds, "vehicles": [...]}."""
    path = Path(path)
    if not path.exists():
        raise DatasetIOError(f"simulator frame file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DatasetIOError(f"malformed simulator frame file {path}: {exc}") from exc
    if isinstance(data, dict):
        timestamp = data.get("timestamp")
        raw_states = data.get("vehicles", [])
    else:
        timestamp = None
        raw_states = data
    states = []
    try:
        for raw in raw_states:
            name = raw["class"]
            if name not in _CLASS_BY_NAME:
                raise DomainError(
                    f"unknown entity class {name!r}; choose one of {sorted(_CLASS_BY_NAME)}"
                )
            color = raw["color"]
            states.append(
                SimVehicleState(
                    lane_id=raw["lane_id"],
                    offset=float(raw["offset"]),
                    entity_class=_CLASS_BY_NAME[name],
                    color=tuple(color) if isinstance(color, (list, tuple)) else color,
                    timestamp=raw.get("timestamp"),
                )
            )
            if timestamp is None and states[-1].timestamp is not None:
                timestamp = states[-1].timestamp
    except (KeyError, TypeError, ValueError) as exc:
        raise DatasetIOError(f"malformed vehicle state in {path}: {exc}") from exc
    return states, timestamp
