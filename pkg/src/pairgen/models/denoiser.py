"""Residual MLP denoiser over co-latent vectors."""
import math

import torch
from torch import nn


def timestep_embedding(t: torch.Tensor, dim: int) -> torch.Tensor:
    """Sinusoidal embedding of (possibly fractional) timesteps.

    Args:
        t (torch.Tensor): N timesteps.
        dim (int): Embedding width, even.

    Returns:
        torch.Tensor: N x dim embedding.
    """
    half = dim // 2
    freqs = torch.exp(
        -math.log(10000.0) * torch.arange(half, dtype=torch.float32, device=t.device) / half
    )
    args = t.float()[:, None] * freqs[None, :]
    return torch.cat([torch.cos(args), torch.sin(args)], dim=-1)


class ResidualBlock(nn.Module):
    """x + MLP(norm(x) + time embedding)."""

    def __init__(self, hidden: int, time_dim: int):
        super().__init__()
        self.norm = nn.LayerNorm(hidden)
        self.time = nn.Linear(time_dim, hidden)
        self.mlp = nn.Sequential(
            nn.Linear(hidden, hidden), nn.SiLU(), nn.Linear(hidden, hidden)
        )

    def forward(self, x: torch.Tensor, temb: torch.Tensor) -> torch.Tensor:
        return x + self.mlp(self.norm(x) + self.time(temb))


class Denoiser(nn.Module):
    """Predicts the v-target of a noisy latent at a timestep.

    The output layer starts at zero, so an untrained model predicts u = 0.
    """

    def __init__(self, latent_dim: int = 128, hidden: int = 512, blocks: int = 4):
        super().__init__()
        self.latent_dim = latent_dim
        self.time_dim = hidden
        self.time_mlp = nn.Sequential(nn.Linear(hidden, hidden), nn.SiLU())
        self.inp = nn.Linear(latent_dim, hidden)
        self.blocks = nn.ModuleList([ResidualBlock(hidden, hidden) for _ in range(blocks)])
        self.out_norm = nn.LayerNorm(hidden)
        self.out = nn.Linear(hidden, latent_dim)
        nn.init.zeros_(self.out.weight)
        nn.init.zeros_(self.out.bias)

    def forward(self, z_t: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
        if z_t.dim() != 2 or z_t.shape[1] != self.latent_dim:
            raise ValueError(f"latent must be N x {self.latent_dim}, got {tuple(z_t.shape)}")
        temb = self.time_mlp(timestep_embedding(t, self.time_dim).to(z_t.dtype))
        x = self.inp(z_t)
        for block in self.blocks:
            x = block(x, temb)
        return self.out(self.out_norm(x))
