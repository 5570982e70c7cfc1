"""Spatially-adaptive normalization GAN components.

The generator is a stack of ResNet blocks whose normalization layers are
modulated by the condition volume: activations are standardized per channel
and rescaled by spatially varying gamma/beta maps computed from the volume,
which is area-rescaled to each block's resolution. The discriminator is a
two-scale patch discriminator fed a single volume that stacks, along the
height axis, one generated image with the two real images it is paired with,
each concatenated channel-wise with its one-hot segmentation map and its
latent image.
"""
from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn

from .config import DiscriminatorSettings, GeneratorSettings
from .dataset import NUM_SEGMAP_CLASSES
from .errors import DomainError

SIGMA_FLOOR = 1e-5


def modulated_normalize(
    h: torch.Tensor, gamma: torch.Tensor, beta: torch.Tensor, eps: float = SIGMA_FLOOR
) -> torch.Tensor:
    """Standardize per channel over (batch, height, width), then modulate.

    Returns gamma * (h - mu_c) / sigma_c + beta with sigma floored at eps.
    """
    if h.ndim != 4 or gamma.shape[1:] != h.shape[1:] or beta.shape[1:] != h.shape[1:]:
        raise DomainError(
            f"shape mismatch: h {tuple(h.shape)}, gamma {tuple(gamma.shape)}, "
            f"beta {tuple(beta.shape)}"
        )
    mu = h.mean(dim=(0, 2, 3), keepdim=True)
    sigma = h.std(dim=(0, 2, 3), unbiased=False, keepdim=True).clamp_min(eps)
    return gamma * (h - mu) / sigma + beta


class SpadeNorm(nn.Module):
    """Normalization block: condition volume -> (gamma, beta) -> modulation."""

    def __init__(self, channels: int, omega_channels: int, hidden: int = 64):
        super().__init__()
        self.shared = nn.Sequential(
            nn.Conv2d(omega_channels, hidden, kernel_size=3, padding=1),
            nn.ReLU(inplace=True),
        )
        self.to_gamma = nn.Conv2d(hidden, channels, kernel_size=3, padding=1)
        self.to_beta = nn.Conv2d(hidden, channels, kernel_size=3, padding=1)

    def forward(self, h: torch.Tensor, omega: torch.Tensor) -> torch.Tensor:
        if omega.shape[2:] != h.shape[2:]:
            raise DomainError(
                f"condition volume {tuple(omega.shape[2:])} not rescaled to "
                f"activation resolution {tuple(h.shape[2:])}"
            )
        a = self.shared(omega)
        return modulated_normalize(h, self.to_gamma(a), self.to_beta(a))


class SpadeResnetBlock(nn.Module):
    def __init__(self, in_ch: int, out_ch: int, omega_channels: int, hidden: int = 64):
        super().__init__()
        mid = min(in_ch, out_ch)
        self.norm1 = SpadeNorm(in_ch, omega_channels, hidden)
        self.conv1 = nn.Conv2d(in_ch, mid, kernel_size=3, padding=1)
        self.norm2 = SpadeNorm(mid, omega_channels, hidden)
        self.conv2 = nn.Conv2d(mid, out_ch, kernel_size=3, padding=1)
        self.learned_shortcut = in_ch != out_ch
        if self.learned_shortcut:
            self.norm_s = SpadeNorm(in_ch, omega_channels, hidden)
            self.conv_s = nn.Conv2d(in_ch, out_ch, kernel_size=1, bias=False)

    def forward(self, x: torch.Tensor, omega: torch.Tensor) -> torch.Tensor:
        dx = self.conv1(F.leaky_relu(self.norm1(x, omega), 0.2))
        dx = self.conv2(F.leaky_relu(self.norm2(dx, omega), 0.2))
        xs = self.conv_s(self.norm_s(x, omega)) if self.learned_shortcut else x
        return xs + dx


def rescale_omega(omega: torch.Tensor, size: tuple[int, int]) -> torch.Tensor:
    """Downscale the condition volume to a block resolution (area interpolation)."""
    if omega.shape[2:] == size:
        return omega
    return F.interpolate(omega, size=size, mode="area")


class Generator(nn.Module):
    """SPADE ResNet generator driven by the condition volume.

    The one-hot segmentation map, downsampled to the starting resolution, is
    the input feature map; an optional per-image noise vector is projected and
    added. Blocks run at doubling resolutions up to the condition volume's
    resolution, followed by `post_upsamples` plain upsampling stages; output
    is an RGB image in [-1, 1].
    """

    def __init__(
        self,
        settings: GeneratorSettings,
        omega_channels: int,
        omega_hw: tuple[int, int],
        num_classes: int = NUM_SEGMAP_CLASSES,
    ):
        super().__init__()
        self.settings = settings
        self.omega_channels = omega_channels
        self.omega_hw = omega_hw
        self.num_classes = num_classes

        channels = settings.channels
        down = 2 ** (settings.num_blocks - 1)
        if omega_hw[0] % down or omega_hw[1] % down:
            raise DomainError(
                f"condition volume {omega_hw} not divisible by 2^(blocks-1)={down}"
            )
        self.start_hw = (omega_hw[0] // down, omega_hw[1] // down)

        self.stem = nn.Conv2d(num_classes, channels[0], kernel_size=3, padding=1)
        if settings.use_noise:
            self.z_proj = nn.Linear(
                settings.z_dim, channels[0] * self.start_hw[0] * self.start_hw[1]
            )
        self.blocks = nn.ModuleList(
            SpadeResnetBlock(channels[i], channels[i + 1], omega_channels, settings.spade_hidden)
            for i in range(settings.num_blocks)
        )
        post = []
        c = channels[-1]
        for _ in range(settings.post_upsamples):
            post += [
                nn.Upsample(scale_factor=2, mode="nearest"),
                nn.Conv2d(c, c, kernel_size=3, padding=1),
                nn.LeakyReLU(0.2, inplace=True),
            ]
        self.post = nn.Sequential(*post)
        self.to_rgb = nn.Conv2d(c, 3, kernel_size=3, padding=1)

    @property
    def image_hw(self) -> tuple[int, int]:
        scale = 2**self.settings.post_upsamples
        return (self.omega_hw[0] * scale, self.omega_hw[1] * scale)

    def forward(
        self, segmap_onehot: torch.Tensor, omega: torch.Tensor, z: torch.Tensor | None = None
    ) -> torch.Tensor:
        if segmap_onehot.shape[1] != self.num_classes:
            raise DomainError(
                f"segmentation one-hot has {segmap_onehot.shape[1]} channels, "
                f"expected {self.num_classes}"
            )
        if omega.shape[2:] != self.omega_hw:
            raise DomainError(
                f"condition volume resolution {tuple(omega.shape[2:])} does not match "
                f"generator configuration {self.omega_hw}"
            )
        x = self.stem(F.interpolate(segmap_onehot, size=self.start_hw, mode="nearest"))
        if self.settings.use_noise:
            if z is None:
                raise DomainError("generator configured with noise input but z is None")
            b = x.shape[0]
            x = x + self.z_proj(z).reshape(b, -1, self.start_hw[0], self.start_hw[1])

        res = self.start_hw
        for i, block in enumerate(self.blocks):
            x = block(x, rescale_omega(omega, res))
            if i < len(self.blocks) - 1:
                x = F.interpolate(x, scale_factor=2, mode="nearest")
                res = (res[0] * 2, res[1] * 2)
        x = self.post(x)
        return torch.tanh(self.to_rgb(F.leaky_relu(x, 0.2)))


class PatchDiscriminator(nn.Module):
    """Fully convolutional patch scorer; exposes intermediate features."""

    def __init__(self, in_channels: int, base_channels: int = 64, n_layers: int = 3):
        super().__init__()
        blocks = [
            nn.Sequential(
                nn.Conv2d(in_channels, base_channels, kernel_size=4, stride=2, padding=1),
                nn.LeakyReLU(0.2, inplace=True),
            )
        ]
        c = base_channels
        for _ in range(n_layers - 1):
            blocks.append(
                nn.Sequential(
                    nn.Conv2d(c, min(c * 2, 512), kernel_size=4, stride=2, padding=1),
                    nn.InstanceNorm2d(min(c * 2, 512), affine=True),
                    nn.LeakyReLU(0.2, inplace=True),
                )
            )
            c = min(c * 2, 512)
        blocks.append(
            nn.Sequential(
                nn.Conv2d(c, min(c * 2, 512), kernel_size=3, stride=1, padding=1),
                nn.InstanceNorm2d(min(c * 2, 512), affine=True),
                nn.LeakyReLU(0.2, inplace=True),
            )
        )
        self.blocks = nn.ModuleList(blocks)
        self.score = nn.Conv2d(min(c * 2, 512), 1, kernel_size=3, stride=1, padding=1)

    def forward(self, x: torch.Tensor) -> tuple[torch.Tensor, list[torch.Tensor]]:
        features = []
        for block in self.blocks:
            x = block(x)
            features.append(x)
        return self.score(x), features


class MultiScaleDiscriminator(nn.Module):
    """Patch discriminators at full and half resolution."""

    def __init__(self, in_channels: int, settings: DiscriminatorSettings):
        super().__init__()
        self.in_channels = in_channels
        self.scales = nn.ModuleList(
            PatchDiscriminator(in_channels, settings.base_channels, settings.n_layers)
            for _ in range(settings.num_scales)
        )

    def forward(self, x: torch.Tensor) -> list[tuple[torch.Tensor, list[torch.Tensor]]]:
        if x.shape[1] != self.in_channels:
            raise DomainError(
                f"discriminator input has {x.shape[1]} channels, expected {self.in_channels}"
            )
        outputs = []
        for i, scale in enumerate(self.scales):
            if i > 0:
                x = F.avg_pool2d(x, kernel_size=3, stride=2, padding=1, count_include_pad=False)
            outputs.append(scale(x))
        return outputs


def discriminator_in_channels(latent_channels: int, num_classes: int = NUM_SEGMAP_CLASSES) -> int:
    """Image (3) + segmentation one-hot + latent image channels."""
    return 3 + num_classes + latent_channels


def assemble_discriminator_batch(
    reals: torch.Tensor,
    fakes: torch.Tensor,
    segmaps: torch.Tensor,
    latents: torch.Tensor,
) -> torch.Tensor:
    """Build the discriminator input volume from 2k reals and k fakes.

    `segmaps` (one-hot) and `latents` align with `reals`; fake i shares the
    condition of real 2i. Every image is concatenated channel-wise with its
    segmentation map and its latent image (upsampled to image resolution),
    then each triple (fake_i, real_2i, real_2i+1) is stacked along the height
    axis into one (C, 3H, W) volume.
    """
    if reals.shape[0] != 2 * fakes.shape[0]:
        raise DomainError(
            f"need exactly two reals per fake, got {reals.shape[0]} reals "
            f"and {fakes.shape[0]} fakes"
        )
    if segmaps.shape[0] != reals.shape[0] or latents.shape[0] != reals.shape[0]:
        raise DomainError("segmaps and latents must align with the real images")

    h, w = reals.shape[2:]
    latents_up = F.interpolate(latents, size=(h, w), mode="nearest-exact")
    stacked = torch.cat([reals, segmaps, latents_up], dim=1)  # (2k, C', H, W)

    k = fakes.shape[0]
    fake_stacked = torch.cat(
        [fakes, segmaps[0::2], latents_up[0::2]], dim=1
    )  # (k, C', H, W)
    units = torch.cat(
        [fake_stacked, stacked[0::2], stacked[1::2]], dim=2
    )  # (k, C', 3H, W)
    return units


def split_height_regions(t: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Split an assembled volume (or its feature maps) back into its three
    height regions: (fake, condition-matched real, other real)."""
    if t.shape[2] % 3:
        raise DomainError(
            f"height {t.shape[2]} is not divisible by 3; assembled volumes stack "
            "three image regions vertically"
        )
    return tuple(torch.chunk(t, 3, dim=2))
