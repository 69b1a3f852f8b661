"""Select the torch device and put the runtime into a reproducible state."""
import logging
import os
import random

import numpy as np
import torch

device = None


def get_device() -> torch.device:
    """Get the reference to a singleton torch device.

    The device is read from the `PAIRGEN_DEVICE` environment variable the first time
    this method is called, defaulting to the cpu.

    Returns:
        torch.device: The device all networks are placed on.
    """
    global device
    if device is None:
        device = torch.device(os.getenv("PAIRGEN_DEVICE", "cpu"))
    return device


def init_torch(seed: int = 0, deterministic: bool = True, threads: int = None):
    """Seed every random generator and configure deterministic execution.

    Args:
        seed (int, optional): Seed for python, numpy and torch. Defaults to 0.
        deterministic (bool, optional): When True, torch is restricted to
        deterministic kernels so that identical runs produce bit-identical
        checkpoints on the same platform. Defaults to True.
        threads (int, optional): Intra-op thread count. Defaults to None, leaving the
        torch default in place.
    """
    random.seed(seed)
    np.random.seed(seed % 2**32)
    torch.manual_seed(seed)

    torch.use_deterministic_algorithms(deterministic)
    torch.backends.cudnn.benchmark = not deterministic
    if deterministic:
        # required by cuBLAS for deterministic matmuls, harmless on cpu
        os.environ.setdefault("CUBLAS_WORKSPACE_CONFIG", ":4096:8")

    if threads:
        torch.set_num_threads(int(threads))

    logging.getLogger(__name__).debug(
        "torch initialized [seed=%d, deterministic=%s, device=%s]",
        seed,
        deterministic,
        get_device(),
    )
