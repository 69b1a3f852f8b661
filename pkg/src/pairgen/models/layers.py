"""Convolution building blocks shared by the networks."""
import torch
from torch import nn


def _groups(channels: int) -> int:
    for g in (8, 4, 2):
        if channels % g == 0 and channels >= 2 * g:
            return g
    return 1


class ConvBlock(nn.Module):
    """Convolution followed by group normalization and SiLU.

    With `activate=False` the block is a bare convolution.
    """

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size=3,
        stride=1,
        padding=1,
        activate: bool = True,
    ):
        super().__init__()
        layers = [nn.Conv2d(in_channels, out_channels, kernel_size, stride, padding)]
        if activate:
            layers.append(nn.GroupNorm(_groups(out_channels), out_channels))
            layers.append(nn.SiLU())
        self.layers = nn.Sequential(*layers)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.layers(x)


class UpBlock(nn.Module):
    """Nearest-neighbor upsampling by 2 followed by a ConvBlock."""

    def __init__(self, in_channels: int, out_channels: int):
        super().__init__()
        self.up = nn.Upsample(scale_factor=2, mode="nearest")
        self.conv = ConvBlock(in_channels, out_channels)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.conv(self.up(x))


def temporal_stack(in_channels: int, channels: int, stages: int) -> nn.Sequential:
    """Stride-(2, 1) convolutions halving the time axis `stages` times."""
    layers = []
    for i in range(stages):
        layers.append(
            ConvBlock(
                in_channels if i == 0 else channels,
                channels,
                kernel_size=(7, 1),
                stride=(2, 1),
                padding=(3, 0),
            )
        )
    return nn.Sequential(*layers)


def spatial_stack(in_channels: int, widths: list[int], linear_last: bool) -> nn.Sequential:
    """Stride-2 convolutions, one per entry of `widths`."""
    layers = []
    for i, width in enumerate(widths):
        last = i == len(widths) - 1
        layers.append(
            ConvBlock(
                in_channels if i == 0 else widths[i - 1],
                width,
                stride=2,
                activate=not (last and linear_last),
            )
        )
    return nn.Sequential(*layers)
