"""One encoder, two decoders: the shared co-latent network and its losses."""
from dataclasses import dataclass
import math

import torch
from torch import nn

from ..data import Modality, to_modality
from .layers import UpBlock, spatial_stack, temporal_stack

COMPONENTS = ("encoder", "proj_velocity", "dec_velocity", "proj_seismic", "dec_seismic")


@dataclass(frozen=True)
class EncDecConfig:
    """Network shape settings.

    Attributes:
        latent_dim (int): Co-latent length c.
        velocity_shape (tuple[int, int]): H x W of a velocity map, powers of two.
        seismic_shape (tuple[int, int, int]): S x Tt x R of a gather.
        majority_modality (str): Modality fed to the encoder.
        time_tokens (int): Token rows over the time axis of the seismic decoder.
        receiver_tokens (int): Token columns over the receiver axis.
        token_dim (int): Transformer width.
        heads (int): Attention heads.
        ff_dim (int): Transformer feed-forward width.
        layers (int): Transformer blocks.
    """

    latent_dim: int = 128
    velocity_shape: tuple = (32, 32)
    seismic_shape: tuple = (3, 256, 32)
    majority_modality: str = "velocity"
    time_tokens: int = 4
    receiver_tokens: int = 16
    token_dim: int = 128
    heads: int = 4
    ff_dim: int = 256
    layers: int = 4

    def validate(self):
        """Check that the shapes can be reached by the stride-2 stacks.

        Raises:
            ValueError: When a shape is incompatible with the network layout.
        """
        to_modality(self.majority_modality)
        h, w = self.velocity_shape
        s, t, r = self.seismic_shape
        if h != w or h < 2 or h & (h - 1):
            raise ValueError(f"velocity shape must be square power of two, got {(h, w)}")
        if r & (r - 1) or t % r or (t // r) & (t // r - 1):
            raise ValueError(
                f"seismic shape {self.seismic_shape} needs power-of-two receivers and "
                "a power-of-two time/receiver ratio"
            )
        if t % self.time_tokens or r % self.receiver_tokens:
            raise ValueError(
                f"token grid {self.time_tokens}x{self.receiver_tokens} does not tile "
                f"{(t, r)}"
            )
        if self.token_dim % self.heads:
            raise ValueError(f"token_dim {self.token_dim} not divisible by {self.heads} heads")


def _widths(size: int, latent_dim: int) -> list[int]:
    """Channel widths doubling from 8 up to the latent width, one per halving."""
    stages = int(math.log2(size))
    widths = [min(8 * 2**i, latent_dim) for i in range(stages)]
    widths[-1] = latent_dim
    return widths


class Encoder(nn.Module):
    """Downsample a majority array to a length-c vector."""

    def __init__(self, cfg: EncDecConfig):
        super().__init__()
        self.modality = to_modality(cfg.majority_modality)
        if self.modality == Modality.VELOCITY:
            self.input_shape = tuple(cfg.velocity_shape)
            self.temporal = nn.Identity()
            in_channels, size = 1, cfg.velocity_shape[0]
        else:
            s, t, r = cfg.seismic_shape
            self.input_shape = tuple(cfg.seismic_shape)
            self.temporal = temporal_stack(s, 8, int(math.log2(t // r)))
            in_channels, size = 8, r
        self.spatial = spatial_stack(in_channels, _widths(size, cfg.latent_dim), True)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if self.modality == Modality.VELOCITY:
            x = x.unsqueeze(1)
        return self.spatial(self.temporal(x)).flatten(1)


class VelocityDecoder(nn.Module):
    """Upsample a projected latent to an H x W map in [-1, 1]."""

    def __init__(self, cfg: EncDecConfig):
        super().__init__()
        widths = list(reversed(_widths(cfg.velocity_shape[0], cfg.latent_dim)))
        widths = widths[1:] + [widths[-1]]
        blocks = []
        for i, width in enumerate(widths):
            blocks.append(UpBlock(cfg.latent_dim if i == 0 else widths[i - 1], width))
        self.blocks = nn.Sequential(*blocks)
        self.head = nn.Conv2d(widths[-1], 1, 3, padding=1)

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        x = self.blocks(z[:, :, None, None])
        return torch.tanh(self.head(x)).squeeze(1)


class SeismicDecoder(nn.Module):
    """Transformer over a time x receiver token grid, folded into S x Tt x R."""

    def __init__(self, cfg: EncDecConfig):
        super().__init__()
        s, t, r = cfg.seismic_shape
        self.shape = (s, t, r)
        self.grid = (cfg.time_tokens, cfg.receiver_tokens)
        self.patch = (t // cfg.time_tokens, r // cfg.receiver_tokens)
        n_tokens = cfg.time_tokens * cfg.receiver_tokens

        self.positions = nn.Parameter(torch.randn(1, n_tokens, cfg.token_dim) * 0.02)
        layer = nn.TransformerEncoderLayer(
            d_model=cfg.token_dim,
            nhead=cfg.heads,
            dim_feedforward=cfg.ff_dim,
            dropout=0.0,
            activation="gelu",
            batch_first=True,
        )
        self.transformer = nn.TransformerEncoder(
            layer, num_layers=cfg.layers, enable_nested_tensor=False
        )
        self.head = nn.Linear(cfg.token_dim, s * self.patch[0] * self.patch[1])

    def forward(self, tokens: torch.Tensor) -> torch.Tensor:
        n = tokens.shape[0]
        x = self.transformer(tokens + self.positions)
        x = self.head(x)
        s, (gt, gr), (pt, pr) = self.shape[0], self.grid, self.patch
        x = x.view(n, gt, gr, s, pt, pr).permute(0, 3, 1, 4, 2, 5)
        return torch.tanh(x.reshape(n, *self.shape))


class TwoHeadNet(nn.Module):
    """Shared encoder with a velocity head and a seismic head.

    Each head is a single linear projection of the co-latent followed by its
    decoder. The components are named `encoder`, `proj_velocity`, `dec_velocity`,
    `proj_seismic` and `dec_seismic`.
    """

    def __init__(self, cfg: EncDecConfig = None):
        super().__init__()
        cfg = cfg or EncDecConfig()
        cfg.validate()
        self.cfg = cfg
        self.majority = to_modality(cfg.majority_modality)
        self.latent_dim = cfg.latent_dim

        self.encoder = Encoder(cfg)
        self.proj_velocity = nn.Linear(cfg.latent_dim, cfg.latent_dim)
        self.dec_velocity = VelocityDecoder(cfg)
        self.proj_seismic = nn.Linear(
            cfg.latent_dim, cfg.time_tokens * cfg.receiver_tokens * cfg.token_dim
        )
        self.dec_seismic = SeismicDecoder(cfg)
        self._tokens = (cfg.time_tokens * cfg.receiver_tokens, cfg.token_dim)

    @property
    def minority(self) -> Modality:
        return self.majority.other

    def shape_of(self, modality: str | Modality) -> tuple[int, ...]:
        if to_modality(modality) == Modality.VELOCITY:
            return tuple(self.cfg.velocity_shape)
        return tuple(self.cfg.seismic_shape)

    def component_names(self, modality: str | Modality) -> tuple[str, str]:
        """Projection and decoder names of one modality's head."""
        m = to_modality(modality).value
        return (f"proj_{m}", f"dec_{m}")

    @property
    def majority_components(self) -> tuple[str, ...]:
        return ("encoder",) + self.component_names(self.majority)

    @property
    def minority_components(self) -> tuple[str, ...]:
        return self.component_names(self.minority)

    def parameters_of(self, names) -> list[nn.Parameter]:
        """Parameters of the named components."""
        params = []
        for name in names:
            if name not in COMPONENTS:
                raise ValueError(f"unknown component {name}")
            params.extend(getattr(self, name).parameters())
        return params

    def _check_latent(self, z: torch.Tensor):
        if z.dim() != 2 or z.shape[-1] != self.latent_dim:
            raise ValueError(
                f"latent must be N x {self.latent_dim}, got {tuple(z.shape)}"
            )

    def encode(self, ma: torch.Tensor) -> torch.Tensor:
        """Compress majority arrays to co-latents.

        Args:
            ma (torch.Tensor): N x (majority shape), normalized, or a single array.

        Raises:
            ValueError: When the shape does not match the majority modality.

        Returns:
            torch.Tensor: N x c co-latents, or a length-c vector for a single input.
        """
        expected = self.encoder.input_shape
        single = tuple(ma.shape) == expected
        if single:
            ma = ma.unsqueeze(0)
        if tuple(ma.shape[1:]) != expected:
            raise ValueError(
                f"{self.majority.value} input must have shape {expected}, got "
                f"{tuple(ma.shape)}"
            )
        z = self.encoder(ma)
        return z[0] if single else z

    def decode_velocity(self, z: torch.Tensor) -> torch.Tensor:
        """Decode co-latents to velocity maps in [-1, 1].

        Raises:
            ValueError: When z is not N x c.
        """
        self._check_latent(z)
        return self.dec_velocity(self.proj_velocity(z))

    def decode_seismic(self, z: torch.Tensor) -> torch.Tensor:
        """Decode co-latents to seismic gathers in [-1, 1].

        Raises:
            ValueError: When z is not N x c.
        """
        self._check_latent(z)
        tokens = self.proj_seismic(z).view(z.shape[0], *self._tokens)
        return self.dec_seismic(tokens)

    def decode(self, z: torch.Tensor, modality: str | Modality) -> torch.Tensor:
        if to_modality(modality) == Modality.VELOCITY:
            return self.decode_velocity(z)
        return self.decode_seismic(z)

    def forward_pair(self, ma: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """Encode once and decode both modalities.

        Returns:
            tuple[torch.Tensor, torch.Tensor]: (velocity, seismic) batches.
        """
        z = self.encode(ma)
        return self.decode_velocity(z), self.decode_seismic(z)

    def forward(self, ma: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        return self.forward_pair(ma)


@dataclass(frozen=True)
class LossWeights:
    """Reconstruction loss weights and the step-2 freeze flag."""

    gamma1: float = 1.0
    gamma2: float = 1.0
    gamma3: float = 1.0
    gamma4: float = 1.0
    freeze: int = 1

    def __post_init__(self):
        if self.freeze not in (0, 1) or isinstance(self.freeze, bool):
            raise ValueError(f"freeze flag must be exactly 0 or 1, got {self.freeze!r}")
        for name in ("gamma1", "gamma2", "gamma3", "gamma4"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative, got {getattr(self, name)}")


def _check_shapes(pred: torch.Tensor, target: torch.Tensor, what: str):
    if pred.shape != target.shape:
        raise ValueError(
            f"{what} prediction shape {tuple(pred.shape)} != target {tuple(target.shape)}"
        )


def _l1_l2(pred, target, a: float, b: float) -> torch.Tensor:
    diff = pred - target
    return a * diff.abs().mean() + b * diff.pow(2).mean()


def loss_majority(pred: torch.Tensor, target: torch.Tensor, w: LossWeights) -> torch.Tensor:
    """gamma1 * mean |pred - target| + gamma2 * mean (pred - target)^2.

    Raises:
        ValueError: When the shapes differ.
    """
    _check_shapes(pred, target, "majority")
    return _l1_l2(pred, target, w.gamma1, w.gamma2)


def loss_minority(
    pred_ma: torch.Tensor | None,
    target_ma: torch.Tensor | None,
    pred_mi: torch.Tensor,
    target_mi: torch.Tensor,
    w: LossWeights,
) -> torch.Tensor:
    """Minority reconstruction loss, plus the majority loss when not frozen.

    With `w.freeze == 1` the majority arguments are ignored and may be None.

    Raises:
        ValueError: When the shapes differ per modality.
    """
    _check_shapes(pred_mi, target_mi, "minority")
    loss = _l1_l2(pred_mi, target_mi, w.gamma3, w.gamma4)
    if w.freeze == 0:
        loss = loss + loss_majority(pred_ma, target_ma, w)
    return loss
