"""Variance-preserving noise schedules and the v-parameterization algebra."""
from dataclasses import dataclass
import math

import numpy as np
import torch

ALPHA_FLOOR = 1e-4


@dataclass(frozen=True)
class NoiseSchedule:
    """Signal and noise scales for t = 0..T.

    Attributes:
        T (int): Number of diffusion steps.
        alpha (np.ndarray): Signal scale, length T + 1, non-increasing from 1.
        sigma (np.ndarray): Noise standard deviation, sqrt(1 - alpha^2).
        kind (str): "cosine" or "linear".
    """

    T: int
    alpha: np.ndarray
    sigma: np.ndarray
    kind: str = "cosine"

    def coefficients(self, t, like: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """alpha[t] and sigma[t] as tensors broadcastable against `like`.

        Args:
            t (int | torch.Tensor): A timestep or one per row of `like`.
            like (torch.Tensor): Vector or N x c batch.

        Raises:
            ValueError: When a timestep is outside [0, T].
        """
        index = torch.as_tensor(t, dtype=torch.long)
        if index.numel() and (int(index.min()) < 0 or int(index.max()) > self.T):
            raise ValueError(f"timestep outside [0, {self.T}]: {t}")
        alpha = torch.as_tensor(self.alpha, dtype=like.dtype, device=like.device)[index]
        sigma = torch.as_tensor(self.sigma, dtype=like.dtype, device=like.device)[index]
        if alpha.dim() == 1 and like.dim() > 1:
            alpha, sigma = alpha[:, None], sigma[:, None]
        return alpha, sigma

    def to_dict(self) -> dict:
        return {"T": self.T, "kind": self.kind}

    @staticmethod
    def from_dict(data: dict) -> "NoiseSchedule":
        return make_schedule(data["T"], data.get("kind", "cosine"))


def _linear_alpha(T: int) -> np.ndarray:
    scale = 1000 / T
    betas = np.clip(np.linspace(scale * 1e-4, scale * 0.02, T), 0, 0.999)
    alpha_bar = np.cumprod(1.0 - betas)
    return np.sqrt(np.concatenate([[1.0], alpha_bar]))


def make_schedule(T: int = 256, kind: str = "cosine") -> NoiseSchedule:
    """Build a variance-preserving schedule.

    Args:
        T (int, optional): Number of steps. Defaults to 256.
        kind (str, optional): "cosine" (alpha = cos(t/T * pi/2)) or "linear" (the
        classic linear beta ramp). Defaults to "cosine".

    Raises:
        ValueError: When T < 1 or the kind is unknown.

    Returns:
        NoiseSchedule: The schedule, alpha clipped to at least 1e-4.
    """
    T = int(T)
    if T < 1:
        raise ValueError(f"schedule needs T >= 1, got {T}")

    kind = str(kind).lower()
    if kind == "cosine":
        alpha = np.cos(np.arange(T + 1) / T * math.pi / 2)
    elif kind == "linear":
        alpha = _linear_alpha(T)
    else:
        raise ValueError(f"unknown schedule kind {kind}")

    alpha = np.clip(alpha, ALPHA_FLOOR, 1.0)
    sigma = np.sqrt(1.0 - alpha**2)
    return NoiseSchedule(T, alpha, sigma, kind)


def _check(a: torch.Tensor, b: torch.Tensor, what: str):
    if a.shape != b.shape:
        raise ValueError(f"{what}: length mismatch {tuple(a.shape)} vs {tuple(b.shape)}")


def q_sample(z0: torch.Tensor, t, eps: torch.Tensor, sched: NoiseSchedule) -> torch.Tensor:
    """alpha[t] * z0 + sigma[t] * eps."""
    _check(z0, eps, "q_sample")
    alpha, sigma = sched.coefficients(t, z0)
    return alpha * z0 + sigma * eps


def v_target(z0: torch.Tensor, eps: torch.Tensor, t, sched: NoiseSchedule) -> torch.Tensor:
    """alpha[t] * eps - sigma[t] * z0."""
    _check(z0, eps, "v_target")
    alpha, sigma = sched.coefficients(t, z0)
    return alpha * eps - sigma * z0


def recover_z0(z_t: torch.Tensor, u: torch.Tensor, t, sched: NoiseSchedule) -> torch.Tensor:
    """alpha[t] * z_t - sigma[t] * u."""
    _check(z_t, u, "recover_z0")
    alpha, sigma = sched.coefficients(t, z_t)
    return alpha * z_t - sigma * u


def recover_eps(z_t: torch.Tensor, u: torch.Tensor, t, sched: NoiseSchedule) -> torch.Tensor:
    """sigma[t] * z_t + alpha[t] * u."""
    _check(z_t, u, "recover_eps")
    alpha, sigma = sched.coefficients(t, z_t)
    return sigma * z_t + alpha * u
