"""Small seismic-to-velocity network used to score pairwise consistency."""
import math

import torch
from torch import nn

from .layers import ConvBlock, UpBlock, temporal_stack


class InversionLite(nn.Module):
    """Maps S x Tt x R gathers to H x W maps in [-1, 1].

    Args:
        seismic_shape (tuple[int, int, int]): Input gather shape.
        velocity_shape (tuple[int, int]): Output map shape.
        width (int): Base channel width.
    """

    def __init__(
        self,
        seismic_shape: tuple = (3, 256, 32),
        velocity_shape: tuple = (32, 32),
        width: int = 16,
    ):
        super().__init__()
        s, t, r = seismic_shape
        h, w = velocity_shape
        if t % r or (t // r) & (t // r - 1) or r != w or h != w:
            raise ValueError(
                f"cannot map seismic {seismic_shape} to velocity {velocity_shape}"
            )

        self.seismic_shape = tuple(seismic_shape)
        self.temporal = temporal_stack(s, width, int(math.log2(t // r)))
        self.down = nn.Sequential(
            ConvBlock(width, 2 * width, stride=2),
            ConvBlock(2 * width, 4 * width, stride=2),
            ConvBlock(4 * width, 4 * width, stride=2),
            ConvBlock(4 * width, 4 * width),
        )
        self.up = nn.Sequential(
            UpBlock(4 * width, 4 * width),
            UpBlock(4 * width, 2 * width),
            UpBlock(2 * width, width),
        )
        self.head = nn.Conv2d(width, 1, 3, padding=1)

    def forward(self, seis: torch.Tensor) -> torch.Tensor:
        if tuple(seis.shape[1:]) != self.seismic_shape:
            raise ValueError(
                f"seismic input must be N x {self.seismic_shape}, got {tuple(seis.shape)}"
            )
        x = self.up(self.down(self.temporal(seis)))
        return torch.tanh(self.head(x)).squeeze(1)
