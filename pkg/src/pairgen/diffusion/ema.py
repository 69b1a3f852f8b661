"""Exponential moving average of model weights."""
import copy

import torch
from torch import nn


class EMA:
    """Shadow copy of a model updated as shadow = decay * shadow + (1 - decay) * live.

    The shadow starts as an exact copy of the live model.
    """

    def __init__(self, model: nn.Module, decay: float = 0.995):
        if not 0 < decay < 1:
            raise ValueError(f"EMA decay must be in (0, 1), got {decay}")
        self.decay = decay
        self.shadow = copy.deepcopy(model)
        self.shadow.eval()
        self.shadow.requires_grad_(False)

    @torch.no_grad()
    def update(self, model: nn.Module):
        """Fold the current live parameters into the shadow."""
        for ema_param, param in zip(self.shadow.parameters(), model.parameters()):
            if ema_param.shape != param.shape:
                raise ValueError("EMA shadow and live model are not shape-congruent")
            ema_param.mul_(self.decay).add_(param.detach(), alpha=1 - self.decay)
        for ema_buf, buf in zip(self.shadow.buffers(), model.buffers()):
            ema_buf.copy_(buf)
