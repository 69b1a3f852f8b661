"""Named float32 tensors plus JSON metadata, stored in the dataset container
layout."""
import logging
import os
import re

import numpy as np

from ..errors import ArtifactMissingError, DatasetError
from ..utils.pathvalidator import is_creatable_dir
from .container import read_json, read_tensor, write_json, write_tensor

CHECKPOINT_NAME = "checkpoint.json"

_logger = logging.getLogger(__name__)
_NAME_RE = re.compile(r"^[A-Za-z0-9_.\-]+$")


def save_checkpoint(path: str, tensors: dict[str, np.ndarray], metadata: dict = None):
    """Write a checkpoint directory.

    Args:
        path (str): Destination directory.
        tensors (dict[str, np.ndarray]): Named tensors, stored as float32.
        metadata (dict, optional): JSON-serializable metadata. Defaults to None.

    Raises:
        DatasetError: When the path is not writable or a name is not a safe file
        name.
    """
    if not is_creatable_dir(path):
        raise DatasetError(f"checkpoint path {path} is not writable")
    os.makedirs(path, exist_ok=True)

    shapes = {}
    for name, value in tensors.items():
        if not _NAME_RE.match(name):
            raise DatasetError(f"tensor name {name!r} is not a valid file name")
        value = np.asarray(value)
        write_tensor(os.path.join(path, f"{name}.f32"), value)
        shapes[name] = list(value.shape)

    write_json(
        os.path.join(path, CHECKPOINT_NAME),
        {"version": 1, "dtype": "f32le", "tensors": shapes, "metadata": metadata or {}},
    )
    _logger.debug("wrote %d tensors to %s", len(shapes), path)


def load_checkpoint(path: str) -> tuple[dict[str, np.ndarray], dict]:
    """Read a checkpoint directory.

    Raises:
        ArtifactMissingError: When the directory holds no checkpoint.
        DatasetError: When the checkpoint is corrupted.

    Returns:
        tuple[dict[str, np.ndarray], dict]: The tensors and the metadata.
    """
    fname = os.path.join(path, CHECKPOINT_NAME)
    if not os.path.isfile(fname):
        raise ArtifactMissingError(f"no checkpoint at {fname}")

    data = read_json(fname)
    if "tensors" not in data:
        raise DatasetError(f"invalid checkpoint {fname}: no tensor table")

    tensors = {
        name: read_tensor(os.path.join(path, f"{name}.f32"), tuple(shape))
        for name, shape in data["tensors"].items()
    }
    return tensors, data.get("metadata", {})
