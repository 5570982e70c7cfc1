"""Scene-graph-conditioned synthesis of traffic junction images.

Structured scenes (entity boxes, classes, colors, time of day) are encoded as
lattice+entity graphs, passed through a graph-attention condition model, and
rendered by a spatially-adaptive-normalization generator. Includes dataset
tooling, a simulator bridge, evaluation metrics, a CLI, and an HTTP service.
"""
from .colors import (
    PALETTE,
    PALETTE_NAMES,
    ColorClusters,
    ColorFeature,
    ColorOneHot,
    clusters_from_rgb,
    discretize_color,
    extract_color_clusters,
)
from .condition import ConditionModel, GATLayer, extract_latent_image, graph_tensors
from .config import (
    Config,
    DiscriminatorSettings,
    GeneratorSettings,
    ModelConfig,
    TrainingSettings,
    load_config,
    save_config,
    toy_config,
)
from .dataset import (
    DataPoint,
    Detection,
    SegmentationMap,
    build_datapoint,
    rasterize_segmentation_map,
    read_dataset,
    write_dataset,
)
from .errors import DatasetIOError, DomainError, TrainingError
from .evaluation import (
    EvalReport,
    RandomProjectionExtractor,
    compute_fid,
    compute_miou,
    compute_pixel_accuracy,
    evaluate_model,
)
from .pipeline import GeneratorBundle, generate_image, model_summary
from .scenegraph import (
    BBox,
    EntityClass,
    GraphVariant,
    LatticeSpec,
    SceneEntity,
    SceneGraph,
    TimeEncoding,
    build_lattice,
    build_scene_graph,
    encode_time,
    load_scene_graph,
    save_scene_graph,
)
from .spade import (
    Generator,
    MultiScaleDiscriminator,
    PatchDiscriminator,
    SpadeNorm,
    SpadeResnetBlock,
    assemble_discriminator_batch,
    modulated_normalize,
)
from .sumobridge import (
    BBoxHistogram,
    LaneCorrespondence,
    LaneSpline,
    WaypointPair,
    fit_lane_spline,
    load_lane_correspondence,
    map_lane_position,
    sample_bbox,
    save_lane_correspondence,
    sim_frame_to_scene,
)
from .synthetic import make_synthetic_points
from .training import (
    TrainState,
    init_train_state,
    load_checkpoint,
    save_checkpoint,
    train_loop,
    train_step,
)

__version__ = "0.1.0"

__all__ = [
    "PALETTE",
    "PALETTE_NAMES",
    "BBox",
    "BBoxHistogram",
    "ColorClusters",
    "ColorFeature",
    "ColorOneHot",
    "ConditionModel",
    "Config",
    "DataPoint",
    "DatasetIOError",
    "Detection",
    "DiscriminatorSettings",
    "DomainError",
    "EntityClass",
    "EvalReport",
    "GATLayer",
    "Generator",
    "GeneratorBundle",
    "GeneratorSettings",
    "GraphVariant",
    "LaneCorrespondence",
    "LaneSpline",
    "LatticeSpec",
    "ModelConfig",
    "MultiScaleDiscriminator",
    "PatchDiscriminator",
    "RandomProjectionExtractor",
    "SceneEntity",
    "SceneGraph",
    "SegmentationMap",
    "SpadeNorm",
    "SpadeResnetBlock",
    "TimeEncoding",
    "TrainState",
    "TrainingError",
    "TrainingSettings",
    "WaypointPair",
    "assemble_discriminator_batch",
    "build_datapoint",
    "build_lattice",
    "build_scene_graph",
    "clusters_from_rgb",
    "compute_fid",
    "compute_miou",
    "compute_pixel_accuracy",
    "discretize_color",
    "encode_time",
    "evaluate_model",
    "extract_color_clusters",
    "extract_latent_image",
    "fit_lane_spline",
    "generate_image",
    "graph_tensors",
    "init_train_state",
    "load_checkpoint",
    "load_config",
    "load_lane_correspondence",
    "load_scene_graph",
    "make_synthetic_points",
    "map_lane_position",
    "model_summary",
    "modulated_normalize",
    "rasterize_segmentation_map",
    "read_dataset",
    "sample_bbox",
    "save_checkpoint",
    "save_config",
    "save_lane_correspondence",
    "save_scene_graph",
    "sim_frame_to_scene",
    "toy_config",
    "train_loop",
    "train_step",
    "write_dataset",
]
