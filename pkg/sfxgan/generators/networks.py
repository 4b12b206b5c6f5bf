"""Growing generator and per-channel patch discriminators."""

import copy
from typing import List, Optional, Tuple

import torch
import torch.nn as nn
import torch.nn.functional as F

from sfxgan.core.errors import ShapeMismatchError
from sfxgan.core.models import NoiseMapSet

BASE_BLOCKS = 4
BLOCKS_PER_STAGE = 3


def conv(in_channels: int, out_channels: int, kernel_size: int = 3, dilation: int = 1) -> nn.Conv2d:
    """Stride-1 conv with zero padding that preserves the spatial size."""
    return nn.Conv2d(
        in_channels,
        out_channels,
        kernel_size,
        stride=1,
        padding=dilation * (kernel_size // 2),
        dilation=dilation,
    )


class ConvBlock(nn.Sequential):
    """conv -> batch norm -> LeakyReLU."""

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int, alpha: float):
        super().__init__(
            conv(in_channels, out_channels, kernel_size),
            nn.BatchNorm2d(out_channels, track_running_stats=False),
            nn.LeakyReLU(alpha),
        )


def _center_crop(x: torch.Tensor, size: Tuple[int, int]) -> torch.Tensor:
    top = (x.shape[-2] - size[0]) // 2
    left = (x.shape[-1] - size[1]) // 2
    return x[..., top : top + size[0], left : left + size[1]]


class GrowingGenerator(nn.Module):
    """
    Fully convolutional generator that gains three conv blocks per stage.

    Stage 0 is the head block plus three blocks; each later stage refines the
    upsampled features of the previous one (plus its own noise) through three
    new blocks wrapped in a residual connection. A single output conv maps the
    features back to the spectrogram channels.
    """

    def __init__(
        self,
        channels: int,
        filters: int = 64,
        kernel_size: int = 3,
        alpha: float = 0.05,
        upsample_margin: float = 0.1,
    ):
        super().__init__()
        self.channels = channels
        self.filters = filters
        self.kernel_size = kernel_size
        self.alpha = alpha
        self.upsample_margin = upsample_margin

        self.head = ConvBlock(channels, filters, kernel_size, alpha)
        self.body = nn.ModuleList([self._stage_blocks()])
        self.tail = conv(filters, channels, kernel_size)

    def _stage_blocks(self) -> nn.Sequential:
        return nn.Sequential(
            *[
                ConvBlock(self.filters, self.filters, self.kernel_size, self.alpha)
                for _ in range(BLOCKS_PER_STAGE)
            ]
        )

    @property
    def num_stages(self) -> int:
        return len(self.body)

    def add_stage(self) -> None:
        """Grow by one stage initialised from the current top stage."""
        self.body.append(copy.deepcopy(self.body[-1]))

    def hidden_block_count(self, stage: Optional[int] = None) -> int:
        stage = self.num_stages - 1 if stage is None else stage
        return BASE_BLOCKS + BLOCKS_PER_STAGE * stage

    def stage_modules(self, stage: int) -> List[nn.Module]:
        """Modules whose parameters belong to `stage` (stage 0 owns the head)."""
        return [self.head, self.body[0]] if stage == 0 else [self.body[stage]]

    def noise_channels(self, stage: int) -> int:
        return self.channels if stage == 0 else self.filters

    def forward(self, noise: NoiseMapSet, stage: Optional[int] = None) -> torch.Tensor:
        """
        Generate a (B, C, F, T) spectrogram at `stage`.

        Output spatial shapes follow the noise maps, so widening the maps
        widens the output.
        """
        stage = self.num_stages - 1 if stage is None else stage
        if stage >= self.num_stages:
            raise ShapeMismatchError(f"Generator has {self.num_stages} stages, asked for {stage}")
        if noise.num_stages < stage + 1:
            raise ShapeMismatchError(
                f"Stage {stage} needs {stage + 1} noise maps, got {noise.num_stages}"
            )
        for idx in range(stage + 1):
            if noise.maps[idx].shape[1] != self.noise_channels(idx):
                raise ShapeMismatchError(
                    f"Noise map {idx} has {noise.maps[idx].shape[1]} channels, "
                    f"expected {self.noise_channels(idx)}"
                )

        base = noise.maps[0]
        size = (base.shape[-2], base.shape[-1])
        x = self.head(base * noise.amplitudes[0])
        if self.upsample_margin > 0:
            grown = tuple(int(round(s * (1 + self.upsample_margin))) for s in size)
            x = F.interpolate(x, size=grown, mode="bilinear", align_corners=False)
        x = _center_crop(self.body[0](x), size)

        for idx in range(1, stage + 1):
            target = noise.maps[idx]
            up = F.interpolate(x, size=target.shape[-2:], mode="bilinear", align_corners=False)
            x = self.body[idx](up + noise.amplitudes[idx] * target) + up

        return self.tail(x)


class PatchDiscriminator(nn.Module):
    """
    WGAN critic scoring every receptive-field patch of a spectrogram.

    Each spectrogram channel has its own input conv; the resulting feature
    maps are stacked along the batch axis before the shared body, so the
    critic returns a (C * B, 1, F, T) map ordered channel-major.
    """

    def __init__(
        self,
        channels: int,
        filters: int = 64,
        kernel_size: int = 3,
        dilation: int = 1,
        alpha: float = 0.05,
        groups: int = 3,
    ):
        super().__init__()
        self.channels = channels
        self.dilation = dilation
        self.inputs = nn.ModuleList(
            [
                nn.Sequential(conv(1, filters, kernel_size, dilation), nn.LeakyReLU(alpha))
                for _ in range(channels)
            ]
        )
        layers: List[nn.Module] = []
        for _ in range(groups):
            layers += [conv(filters, filters, kernel_size, dilation), nn.LeakyReLU(alpha)]
        self.body = nn.Sequential(*layers)
        self.tail = conv(filters, 1, kernel_size, dilation)

    @property
    def receptive_field(self) -> int:
        convs = 2 + len(self.body) // 2
        kernel = self.tail.kernel_size[0]
        return 1 + convs * (kernel - 1) * self.dilation

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.shape[1] != self.channels:
            raise ShapeMismatchError(
                f"Discriminator expects {self.channels} channels, got {x.shape[1]}"
            )
        stacked = torch.cat(
            [branch(x[:, c : c + 1]) for c, branch in enumerate(self.inputs)], dim=0
        )
        return self.tail(self.body(stacked))


def count_parameters(modules: List[nn.Module]) -> int:
    return sum(p.numel() for m in modules for p in m.parameters())


def init_weights(module: nn.Module) -> None:
    """Normal(0, 0.02) convs and Normal(1, 0.02) batch-norm scales."""
    if isinstance(module, nn.Conv2d):
        nn.init.normal_(module.weight, 0.0, 0.02)
        if module.bias is not None:
            nn.init.zeros_(module.bias)
    elif isinstance(module, nn.BatchNorm2d):
        nn.init.normal_(module.weight, 1.0, 0.02)
        nn.init.zeros_(module.bias)
