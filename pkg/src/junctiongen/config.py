"""Model and training configuration.

One Config object describes the whole pipeline: lattice and graph variant,
condition-model widths, generator/discriminator schedules, and training
hyperparameters. Configs load from TOML or JSON files and serialize into
checkpoints.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import DomainError
from .scenegraph import GraphVariant, LatticeSpec

# The condition model upsamples the lattice-sized latent image by 2x four
# times, so the condition volume is 16x the lattice resolution.
UPSAMPLE_STAGES = 4
SPATIAL_SCALE = 2**UPSAMPLE_STAGES


@dataclass
class ModelConfig:
    """Condition-model settings: graph variant, lattice, GAT and conv widths."""

    variant: GraphVariant = GraphVariant.CLUSTER
    rows: int = 20
    cols: int = 20
    radius: int = 1
    gat_hidden: int = 64
    gat_heads: tuple[int, int, int] = (4, 4, 1)
    latent_channels: int = 64
    omega_channels: int = 64
    upsample_channels: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if isinstance(self.variant, str):
            self.variant = GraphVariant(self.variant)
        self.gat_heads = tuple(self.gat_heads)
        if len(self.gat_heads) != 3:
            raise DomainError("gat_heads must list one head count per GAT layer (3)")
        if self.upsample_channels is None:
            # Halve per stage from the latent width, floored at the condition
            # volume's channel count.
            sched = []
            c = self.latent_channels
            for _ in range(UPSAMPLE_STAGES - 1):
                c = max(c // 2, self.omega_channels)
                sched.append(c)
            sched.append(self.omega_channels)
            self.upsample_channels = tuple(sched)
        else:
            self.upsample_channels = tuple(self.upsample_channels)
        if len(self.upsample_channels) != UPSAMPLE_STAGES:
            raise DomainError(f"upsample_channels must have {UPSAMPLE_STAGES} entries")
        if self.upsample_channels[-1] != self.omega_channels:
            raise DomainError("upsample schedule must end at omega_channels")

    @property
    def lattice(self) -> LatticeSpec:
        return LatticeSpec(self.rows, self.cols, self.radius)

    @property
    def omega_hw(self) -> tuple[int, int]:
        return (self.rows * SPATIAL_SCALE, self.cols * SPATIAL_SCALE)


@dataclass
class GeneratorSettings:
    """Image-generator schedule. len(channels) - 1 SPADE ResNet blocks run at
    doubling resolutions ending at the condition volume's resolution;
    post_upsamples plain upsampling stages follow to reach the image size."""

    channels: tuple[int, ...] = (1024, 1024, 512, 256, 128, 64, 32)
    post_upsamples: int = 1
    z_dim: int = 16
    use_noise: bool = True
    spade_hidden: int = 64

    def __post_init__(self) -> None:
        self.channels = tuple(self.channels)
        if len(self.channels) < 2:
            raise DomainError("generator needs at least one block (two channel entries)")
        if self.post_upsamples < 0:
            raise DomainError("post_upsamples must be >= 0")

    @property
    def num_blocks(self) -> int:
        return len(self.channels) - 1


@dataclass
class DiscriminatorSettings:
    base_channels: int = 64
    n_layers: int = 3
    num_scales: int = 2


@dataclass
class TrainingSettings:
    batch_size: int = 12
    eval_batch_size: int = 24
    lr_generator: float = 1e-4
    lr_discriminator: float = 4e-4
    beta1: float = 0.0
    beta2: float = 0.999
    feature_matching_weight: float = 10.0
    use_feature_matching: bool = True
    perceptual_weight: float = 0.0
    steps: int = 1000
    seed: int = 0
    checkpoint_every: int = 500

    def __post_init__(self) -> None:
        if self.batch_size < 2 or self.batch_size % 2:
            raise DomainError("batch_size must be even and >= 2 (two reals per fake)")


@dataclass
class Config:
    model: ModelConfig = field(default_factory=ModelConfig)
    generator: GeneratorSettings = field(default_factory=GeneratorSettings)
    discriminator: DiscriminatorSettings = field(default_factory=DiscriminatorSettings)
    training: TrainingSettings = field(default_factory=TrainingSettings)

    def __post_init__(self) -> None:
        oh, ow = self.model.omega_hw
        down = 2 ** (self.generator.num_blocks - 1)
        if oh % down or ow % down:
            raise DomainError(
                f"condition volume {oh}x{ow} is not divisible by 2^(blocks-1)={down}; "
                "adjust generator.channels length or the lattice size"
            )

    @property
    def image_hw(self) -> tuple[int, int]:
        """Output image size: condition volume resolution times 2^post_upsamples."""
        oh, ow = self.model.omega_hw
        scale = 2**self.generator.post_upsamples
        return (oh * scale, ow * scale)


def toy_config(variant: GraphVariant = GraphVariant.DISCRETE, seed: int = 0) -> Config:
    """Desk-scale configuration: 64x64 images on a 4x4 lattice."""
    return Config(
        model=ModelConfig(
            variant=variant,
            rows=4,
            cols=4,
            radius=1,
            gat_hidden=16,
            gat_heads=(2, 2, 1),
            latent_channels=16,
            omega_channels=16,
        ),
        generator=GeneratorSettings(channels=(32, 32, 16, 16, 8, 8), post_upsamples=0, z_dim=8),
        discriminator=DiscriminatorSettings(base_channels=16, n_layers=3, num_scales=2),
        training=TrainingSettings(batch_size=2, eval_batch_size=4, steps=100, seed=seed),
    )


def config_to_dict(config: Config) -> dict:
    data = asdict(config)
    data["model"]["variant"] = config.model.variant.value
    return data


def config_from_dict(data: dict) -> Config:
    try:
        return Config(
            model=ModelConfig(**data.get("model", {})),
            generator=GeneratorSettings(**data.get("generator", {})),
            discriminator=DiscriminatorSettings(**data.get("discriminator", {})),
            training=TrainingSettings(**data.get("training", {})),
        )
    except TypeError as exc:
        raise DomainError(f"invalid config payload: {exc}") from exc


def load_config(path: str | Path) -> Config:
    """Load a Config from a .toml or .json file."""
    path = Path(path)
    if path.suffix == ".toml":
        try:
            import tomllib  # Python >= 3.11
        except ModuleNotFoundError:
            import tomli as tomllib
        data = tomllib.loads(path.read_text())
    elif path.suffix == ".json":
        data = json.loads(path.read_text())
    else:
        raise DomainError(f"unsupported config format {path.suffix!r} (use .toml or .json)")
    return config_from_dict(data)


def save_config(config: Config, path: str | Path) -> None:
    Path(path).write_text(json.dumps(config_to_dict(config), indent=2))
