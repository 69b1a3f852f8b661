"""Convert modules and optimizers to named float32 tensors and back."""
import numpy as np
import torch
from torch import nn


def state_tensors(module: nn.Module, prefix: str = "") -> dict[str, np.ndarray]:
    """Parameters and buffers of a module as numpy arrays keyed by `prefix + name`."""
    return {
        f"{prefix}{name}": value.detach().cpu().numpy()
        for name, value in module.state_dict().items()
    }


def load_state(module: nn.Module, tensors: dict[str, np.ndarray], prefix: str = ""):
    """Load the arrays stored under `prefix` into a module.

    Raises:
        ValueError: When a parameter is missing or unexpected.
    """
    state = {
        name[len(prefix):]: torch.from_numpy(np.array(value))
        for name, value in tensors.items()
        if name.startswith(prefix)
    }
    try:
        module.load_state_dict(state, strict=True)
    except RuntimeError as e:
        raise ValueError(f"checkpoint does not match the network: {e}") from e


def optimizer_tensors(
    optimizer: torch.optim.Optimizer, prefix: str = "opt."
) -> tuple[dict[str, np.ndarray], list[dict]]:
    """Split an optimizer state into tensors and JSON-ready parameter groups."""
    state = optimizer.state_dict()
    tensors = {}
    for index, entry in state["state"].items():
        for key, value in entry.items():
            value = value if torch.is_tensor(value) else torch.tensor(value)
            tensors[f"{prefix}{index}.{key}"] = value.detach().cpu().float().numpy()
    groups = [
        {k: (list(v) if isinstance(v, tuple) else v) for k, v in group.items()}
        for group in state["param_groups"]
    ]
    return tensors, groups


def load_optimizer(
    optimizer: torch.optim.Optimizer,
    tensors: dict[str, np.ndarray],
    groups: list[dict],
    prefix: str = "opt.",
):
    """Restore an optimizer saved with `optimizer_tensors`."""
    state = {}
    for name, value in tensors.items():
        if not name.startswith(prefix):
            continue
        index, key = name[len(prefix):].split(".", 1)
        state.setdefault(int(index), {})[key] = torch.from_numpy(np.array(value))
    groups = [
        {k: (tuple(v) if k == "betas" else v) for k, v in group.items()} for group in groups
    ]
    optimizer.load_state_dict({"state": state, "param_groups": groups})
