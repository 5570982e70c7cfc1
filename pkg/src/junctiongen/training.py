"""Adversarial training loop for the graph-conditioned generator.

Each step performs one discriminator update on an assembled real/fake volume
followed by one generator update (hinge adversarial loss plus feature
matching). The condition model is trained jointly with the generator: its
gradients arrive both through the condition volume and through the latent
images concatenated into the discriminator input.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import torch
import torch.nn.functional as F
from torch import nn

from .condition import ConditionModel
from .config import Config, config_from_dict, config_to_dict
from .dataset import DataPoint
from .errors import DomainError, TrainingError
from .scenegraph import SceneGraph
from .spade import (
    Generator,
    MultiScaleDiscriminator,
    assemble_discriminator_batch,
    discriminator_in_channels,
    split_height_regions,
)

CHECKPOINT_VERSION = 1


class RandomFeaturePerceptual(nn.Module):
    """Frozen, seeded conv pyramid for an optional feature-distance loss.

    Stands in for a pretrained perceptual network so the loss stays hermetic;
    weights are fixed at construction and never trained.
    """

    def __init__(self, seed: int = 0, channels: tuple[int, ...] = (16, 32, 64)):
        super().__init__()
        gen = torch.Generator().manual_seed(seed)
        layers = []
        c_in = 3
        for c_out in channels:
            conv = nn.Conv2d(c_in, c_out, kernel_size=3, stride=2, padding=1)
            with torch.no_grad():
                conv.weight.copy_(torch.randn(conv.weight.shape, generator=gen) * 0.1)
                conv.bias.zero_()
            layers.append(conv)
            c_in = c_out
        self.convs = nn.ModuleList(layers)
        for p in self.parameters():
            p.requires_grad_(False)

    def forward(self, x: torch.Tensor) -> list[torch.Tensor]:
        feats = []
        for conv in self.convs:
            x = F.leaky_relu(conv(x), 0.2)
            feats.append(x)
        return feats


@dataclass
class Batch:
    """Tensors for one training step; reals come in condition pairs."""

    images: torch.Tensor  # (2k, 3, H, W) in [-1, 1]
    segmaps: torch.Tensor  # (2k, 5, H, W) one-hot
    graphs: list[SceneGraph]

    @property
    def num_fakes(self) -> int:
        return self.images.shape[0] // 2


@dataclass
class TrainState:
    config: Config
    condition: ConditionModel
    generator: Generator
    discriminator: MultiScaleDiscriminator
    opt_g: torch.optim.Optimizer
    opt_d: torch.optim.Optimizer
    step: int = 0
    perceptual: RandomFeaturePerceptual | None = field(default=None, repr=False)


def build_models(
    config: Config, device: str | torch.device = "cpu", dtype: torch.dtype = torch.float32
) -> tuple[ConditionModel, Generator, MultiScaleDiscriminator]:
    condition = ConditionModel(config.model)
    generator = Generator(
        config.generator,
        omega_channels=config.model.omega_channels,
        omega_hw=config.model.omega_hw,
    )
    discriminator = MultiScaleDiscriminator(
        discriminator_in_channels(config.model.latent_channels), config.discriminator
    )
    for m in (condition, generator, discriminator):
        m.to(device=device, dtype=dtype)
    return condition, generator, discriminator


def init_train_state(
    config: Config, device: str | torch.device = "cpu", dtype: torch.dtype = torch.float32
) -> TrainState:
    torch.manual_seed(config.training.seed)
    condition, generator, discriminator = build_models(config, device, dtype)
    t = config.training
    opt_g = torch.optim.Adam(
        list(generator.parameters()) + list(condition.parameters()),
        lr=t.lr_generator,
        betas=(t.beta1, t.beta2),
    )
    opt_d = torch.optim.Adam(
        discriminator.parameters(), lr=t.lr_discriminator, betas=(t.beta1, t.beta2)
    )
    perceptual = None
    if t.perceptual_weight > 0:
        perceptual = RandomFeaturePerceptual(seed=t.seed)
        perceptual.to(device=device, dtype=dtype)
    return TrainState(config, condition, generator, discriminator, opt_g, opt_d, perceptual=perceptual)


def prepare_batch(
    points: Sequence[DataPoint],
    device: str | torch.device = "cpu",
    dtype: torch.dtype = torch.float32,
) -> Batch:
    if len(points) < 2 or len(points) % 2:
        raise DomainError(
            f"batch size must be even and >= 2 (two reals per fake), got {len(points)}"
        )
    images = torch.stack(
        [
            torch.from_numpy(p.image.transpose(2, 0, 1)).to(dtype) / 127.5 - 1.0
            for p in points
        ]
    ).to(device)
    segmaps = torch.stack(
        [torch.from_numpy(p.segmap.one_hot()).to(dtype) for p in points]
    ).to(device)
    return Batch(images=images, segmaps=segmaps, graphs=[p.graph for p in points])


def _generate_fakes(
    state: TrainState, batch: Batch, z: torch.Tensor | None
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Run condition model on all graphs, generator on even-indexed conditions."""
    omega, latents = state.condition.forward_graphs(batch.graphs)
    fakes = state.generator(batch.segmaps[0::2], omega[0::2], z)
    return fakes, omega, latents


def _sample_noise(state: TrainState, k: int) -> torch.Tensor | None:
    if not state.config.generator.use_noise:
        return None
    p = next(state.generator.parameters())
    return torch.randn(k, state.config.generator.z_dim, device=p.device, dtype=p.dtype)


def hinge_loss_discriminator(
    outputs: list[tuple[torch.Tensor, list[torch.Tensor]]]
) -> torch.Tensor:
    """Hinge loss over patch scores, split back into the three height regions."""
    total = None
    for score, _ in outputs:
        s_fake, s_real_a, s_real_b = split_height_regions(score)
        loss = (
            F.relu(1.0 + s_fake).mean()
            + 0.5 * F.relu(1.0 - s_real_a).mean()
            + 0.5 * F.relu(1.0 - s_real_b).mean()
        )
        total = loss if total is None else total + loss
    return total / len(outputs)


def hinge_loss_generator(
    outputs: list[tuple[torch.Tensor, list[torch.Tensor]]]
) -> torch.Tensor:
    total = None
    for score, _ in outputs:
        s_fake, _, _ = split_height_regions(score)
        loss = -s_fake.mean()
        total = loss if total is None else total + loss
    return total / len(outputs)


def feature_matching_loss(
    outputs: list[tuple[torch.Tensor, list[torch.Tensor]]]
) -> torch.Tensor:
    """L1 between fake-region features and the condition-matched real region."""
    total = None
    count = 0
    for _, feats in outputs:
        for f in feats:
            f_fake, f_real, _ = split_height_regions(f)
            loss = F.l1_loss(f_fake, f_real.detach())
            total = loss if total is None else total + loss
            count += 1
    return total / count


def train_step(state: TrainState, points: Sequence[DataPoint]) -> dict[str, float]:
    """One alternating update; returns scalar losses (all finite)."""
    p = next(state.generator.parameters())
    batch = prepare_batch(points, device=p.device, dtype=p.dtype)
    z = _sample_noise(state, batch.num_fakes)

    state.opt_d.zero_grad(set_to_none=True)
    with torch.no_grad():
        fakes, _, latents = _generate_fakes(state, batch, z)
    volume = assemble_discriminator_batch(batch.images, fakes, batch.segmaps, latents)
    d_loss = hinge_loss_discriminator(state.discriminator(volume))
    d_loss.backward()
    state.opt_d.step()

    state.opt_g.zero_grad(set_to_none=True)
    fakes, _, latents = _generate_fakes(state, batch, z)
    volume = assemble_discriminator_batch(batch.images, fakes, batch.segmaps, latents)
    outputs = state.discriminator(volume)
    g_adv = hinge_loss_generator(outputs)
    g_loss = g_adv
    losses = {"d": float(d_loss.detach()), "g_adv": float(g_adv.detach())}
    t = state.config.training
    if t.use_feature_matching:
        fm = feature_matching_loss(outputs)
        g_loss = g_loss + t.feature_matching_weight * fm
        losses["g_fm"] = float(fm.detach())
    if state.perceptual is not None:
        matched_reals = batch.images[0::2]
        perc = sum(
            F.l1_loss(a, b.detach())
            for a, b in zip(state.perceptual(fakes), state.perceptual(matched_reals))
        ) / len(state.perceptual.convs)
        g_loss = g_loss + t.perceptual_weight * perc
        losses["g_perceptual"] = float(perc.detach())
    g_loss.backward()
    state.opt_g.step()

    losses["g_total"] = float(g_loss.detach())
    bad = [k for k, v in losses.items() if not math.isfinite(v)]
    if bad:
        raise TrainingError(f"non-finite loss at step {state.step}: {bad}")
    state.step += 1
    return losses


def train_loop(
    state: TrainState,
    points: Sequence[DataPoint],
    steps: int,
    checkpoint_dir: str | Path | None = None,
    log_fn: Callable[[int, dict[str, float]], None] | None = None,
) -> list[dict[str, float]]:
    """Run training up to `steps` total, cycling the dataset deterministically."""
    if not points:
        raise DomainError("training requires a non-empty dataset")
    b = state.config.training.batch_size
    history = []
    while state.step < steps:
        start = state.step * b
        batch = [points[(start + i) % len(points)] for i in range(b)]
        losses = train_step(state, batch)
        history.append(losses)
        if log_fn is not None:
            log_fn(state.step, losses)
        every = state.config.training.checkpoint_every
        if checkpoint_dir is not None and (state.step % every == 0 or state.step == steps):
            save_checkpoint(state, Path(checkpoint_dir) / f"step_{state.step:06d}.pt")
    return history


def save_checkpoint(state: TrainState, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(
        {
            "version": CHECKPOINT_VERSION,
            "config": config_to_dict(state.config),
            "step": state.step,
            "models": {
                "condition": state.condition.state_dict(),
                "generator": state.generator.state_dict(),
                "discriminator": state.discriminator.state_dict(),
            },
            "optimizers": {"g": state.opt_g.state_dict(), "d": state.opt_d.state_dict()},
            "torch_rng": torch.get_rng_state(),
        },
        path,
    )


def load_checkpoint(
    path: str | Path,
    device: str | torch.device = "cpu",
    dtype: torch.dtype = torch.float32,
    restore_rng: bool = True,
) -> TrainState:
    """Rebuild a TrainState whose forward outputs are bit-identical to save time."""
    path = Path(path)
    if not path.exists():
        raise TrainingError(f"checkpoint not found: {path}")
    data = torch.load(path, map_location="cpu", weights_only=False)
    if data.get("version") != CHECKPOINT_VERSION:
        raise TrainingError(
            f"unsupported checkpoint version {data.get('version')!r} in {path}"
        )
    config = config_from_dict(data["config"])
    state = init_train_state(config, device=device, dtype=dtype)
    state.condition.load_state_dict(data["models"]["condition"])
    state.generator.load_state_dict(data["models"]["generator"])
    state.discriminator.load_state_dict(data["models"]["discriminator"])
    state.opt_g.load_state_dict(data["optimizers"]["g"])
    state.opt_d.load_state_dict(data["optimizers"]["d"])
    state.step = data["step"]
    if restore_rng:
        torch.set_rng_state(data["torch_rng"])
    return state
