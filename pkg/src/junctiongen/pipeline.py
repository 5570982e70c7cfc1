"""End-to-end inference: scene description -> graph + segmentation -> image.

Used by both the CLI `generate` subcommand and the HTTP service. A bundle
holds the condition model and generator in eval mode; generation is
deterministic given the same checkpoint, scene, and seed.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .condition import ConditionModel
from .config import Config, config_from_dict
from .dataset import NUM_SEGMAP_CLASSES, Detection, SegmentationMap, rasterize_segmentation_map
from .errors import DomainError, TrainingError
from .scenegraph import SceneEntity, TimeEncoding, build_scene_graph
from .spade import Generator
from .training import CHECKPOINT_VERSION, build_models


def to_uint8_image(t: torch.Tensor) -> np.ndarray:
    """(3, H, W) tensor in [-1, 1] -> (H, W, 3) uint8."""
    arr = ((t.detach().cpu().numpy() + 1.0) * 127.5).round()
    return np.clip(arr, 0, 255).astype(np.uint8).transpose(1, 2, 0)


def encode_png(image: np.ndarray) -> bytes:
    """Lossless, deterministic PNG bytes for an (H, W, 3) uint8 array."""
    from io import BytesIO

    from PIL import Image

    buf = BytesIO()
    Image.fromarray(image).save(buf, format="PNG")
    return buf.getvalue()


def scene_segmap(entities: list[SceneEntity], height: int, width: int) -> SegmentationMap:
    """Rasterize scene entities in list order (later entities painted on top)."""
    detections = [
        Detection(entity_class=e.entity_class, bbox=e.bbox, order_index=i)
        for i, e in enumerate(entities)
    ]
    return rasterize_segmentation_map(detections, height, width)


@dataclass
class GeneratorBundle:
    """Read-only inference state; safe for concurrent forward passes."""

    config: Config
    condition: ConditionModel
    generator: Generator
    checkpoint_step: int | None = None

    @classmethod
    def fresh(cls, config: Config, seed: int = 0) -> "GeneratorBundle":
        torch.manual_seed(seed)
        condition, generator, _ = build_models(config)
        condition.eval()
        generator.eval()
        return cls(config, condition, generator)

    @classmethod
    def from_checkpoint(cls, path: str | Path) -> "GeneratorBundle":
        path = Path(path)
        if not path.exists():
            raise TrainingError(f"checkpoint not found: {path}")
        data = torch.load(path, map_location="cpu", weights_only=False)
        if data.get("version") != CHECKPOINT_VERSION:
            raise TrainingError(
                f"unsupported checkpoint version {data.get('version')!r} in {path}"
            )
        config = config_from_dict(data["config"])
        condition, generator, _ = build_models(config)
        condition.load_state_dict(data["models"]["condition"])
        generator.load_state_dict(data["models"]["generator"])
        condition.eval()
        generator.eval()
        return cls(config, condition, generator, checkpoint_step=data.get("step"))


def generate_image(
    bundle: GeneratorBundle,
    entities: list[SceneEntity],
    time: TimeEncoding,
    seed: int | None = None,
) -> np.ndarray:
    """Generate one RGB uint8 image for a scene at the configured resolution."""
    model_cfg = bundle.config.model
    graph = build_scene_graph(entities, time, model_cfg.lattice, model_cfg.variant)
    height, width = bundle.config.image_hw
    segmap = scene_segmap(entities, height, width)

    p = next(bundle.generator.parameters())
    with torch.no_grad():
        omega, _ = bundle.condition.forward_graphs([graph])
        z = None
        if bundle.config.generator.use_noise:
            rng = torch.Generator()
            rng.manual_seed(0 if seed is None else int(seed))
            z = torch.randn(
                1, bundle.config.generator.z_dim, generator=rng
            ).to(device=p.device, dtype=p.dtype)
        onehot = torch.from_numpy(segmap.one_hot()).unsqueeze(0).to(
            device=p.device, dtype=p.dtype
        )
        out = bundle.generator(onehot, omega, z)[0]
    return to_uint8_image(out)


def count_parameters(module: torch.nn.Module) -> int:
    return sum(p.numel() for p in module.parameters())


def model_summary(bundle: GeneratorBundle) -> dict:
    """Parameter accounting, including overhead over a mask-driven baseline.

    The baseline is the same generator architecture with its normalization
    blocks modulated directly by the 5-channel segmentation one-hot instead of
    the condition volume, i.e. the model without the graph branch.
    """
    cfg = bundle.config
    baseline = Generator(
        cfg.generator, omega_channels=NUM_SEGMAP_CLASSES, omega_hw=cfg.model.omega_hw
    )
    condition_params = count_parameters(bundle.condition)
    generator_params = count_parameters(bundle.generator)
    baseline_params = count_parameters(baseline)
    total = condition_params + generator_params
    if baseline_params <= 0:
        raise DomainError("baseline generator has no parameters")
    return {
        "variant": cfg.model.variant.value,
        "lattice": {"rows": cfg.model.rows, "cols": cfg.model.cols},
        "image_size": list(cfg.image_hw),
        "condition_volume_size": list(cfg.model.omega_hw),
        "condition_model_parameters": condition_params,
        "generator_parameters": generator_params,
        "baseline_generator_parameters": baseline_params,
        "total_parameters": total,
        "overhead_over_baseline": (total - baseline_params) / baseline_params,
        "checkpoint_step": bundle.checkpoint_step,
    }
