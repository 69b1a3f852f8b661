"""Dataset directory container: one raw little-endian float32 file per tensor
plus a JSON manifest."""
import json
import logging
import os

import numpy as np

from ..errors import ArtifactMissingError, DatasetError
from ..utils.pathvalidator import is_creatable_dir
from ._types import DatasetManifest, Modality, PairedSample, to_modality

MANIFEST_NAME = "manifest.json"
F32LE = "<f4"

_logger = logging.getLogger(__name__)


def write_tensor(fname: str, x: np.ndarray):
    """Write a tensor as raw little-endian float32."""
    np.ascontiguousarray(x, dtype=F32LE).tofile(fname)


def read_tensor(fname: str, shape: tuple[int, ...]) -> np.ndarray:
    """Read a raw little-endian float32 tensor.

    Args:
        fname (str): File to read.
        shape (tuple[int, ...]): Expected shape.

    Raises:
        DatasetError: When the file is missing or its size does not match the shape.

    Returns:
        np.ndarray: The float32 tensor.
    """
    expected = int(np.prod(shape)) * 4
    if not os.path.isfile(fname):
        raise DatasetError(f"tensor file {fname} is missing")
    actual = os.path.getsize(fname)
    if actual != expected:
        raise DatasetError(
            f"tensor file {fname} holds {actual} bytes, expected {expected} for "
            f"shape {tuple(shape)}"
        )
    return np.fromfile(fname, dtype=F32LE).astype(np.float32).reshape(shape)


def read_json(fname: str) -> dict:
    """Parse a JSON document, naming the file on failure."""
    try:
        with open(fname, "r", encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise DatasetError(f"cannot parse {fname}: {e}") from e


def write_json(fname: str, data: dict):
    with open(fname, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, sort_keys=True)


def tensor_name(modality: str | Modality, sample_id: int) -> str:
    return f"{to_modality(modality).prefix}_{int(sample_id)}.f32"


def _check_shape(sample: PairedSample, x, modality: Modality, shape):
    if tuple(np.shape(x)) != tuple(shape):
        raise DatasetError(
            f"sample {sample.id} {modality.value} shape {np.shape(x)} does not "
            f"conform to manifest shape {tuple(shape)}"
        )


def save_dataset(samples: list[PairedSample], manifest: DatasetManifest, path: str):
    """Persist samples and manifest to a directory.

    Args:
        samples (list[PairedSample]): The samples, one per majority id.
        manifest (DatasetManifest): The split and normalization metadata.
        path (str): Destination directory, created when absent.

    Raises:
        DatasetError: When the path is not writable or a sample does not conform
        to the manifest.
    """
    try:
        manifest.validate()
    except ValueError as e:
        raise DatasetError(f"invalid manifest: {e}") from e

    if not is_creatable_dir(path):
        raise DatasetError(f"dataset path {path} is not writable")
    os.makedirs(path, exist_ok=True)

    by_id = {s.id: s for s in samples}
    if sorted(by_id) != sorted(manifest.majority_ids):
        raise DatasetError("sample ids do not match the manifest majority ids")

    paired = set(manifest.paired_ids)
    ma_mod, mi_mod = manifest.majority_modality, manifest.minority_modality
    ma_shape, mi_shape = manifest.shape_of(ma_mod), manifest.shape_of(mi_mod)

    for sample_id in manifest.majority_ids:
        sample = by_id[sample_id]
        _check_shape(sample, sample.ma, ma_mod, ma_shape)
        write_tensor(os.path.join(path, tensor_name(ma_mod, sample_id)), sample.ma)

        if sample_id in paired:
            if sample.mi is None:
                raise DatasetError(f"paired sample {sample_id} has no minority tensor")
            _check_shape(sample, sample.mi, mi_mod, mi_shape)
            write_tensor(os.path.join(path, tensor_name(mi_mod, sample_id)), sample.mi)
        elif sample.mi is not None:
            raise DatasetError(
                f"sample {sample_id} carries a minority tensor but is not paired"
            )

    # the manifest goes last so a partial write never looks complete
    write_json(os.path.join(path, MANIFEST_NAME), manifest.to_dict())
    _logger.info(
        "saved dataset to %s (m=%d, n=%d)", path, manifest.m, manifest.n
    )


def load_manifest(path: str) -> DatasetManifest:
    """Load and validate the manifest of a dataset directory.

    Raises:
        ArtifactMissingError: When the directory has no manifest.
        DatasetError: When the manifest cannot be parsed or is invalid.
    """
    fname = os.path.join(path, MANIFEST_NAME)
    if not os.path.isfile(fname):
        raise ArtifactMissingError(f"no dataset manifest at {fname}")

    data = read_json(fname)
    try:
        manifest = DatasetManifest.from_dict(data)
        manifest.validate()
    except (ValueError, TypeError, KeyError) as e:
        raise DatasetError(f"invalid manifest {fname}: {e}") from e
    return manifest


def load_dataset(path: str) -> tuple[list[PairedSample], DatasetManifest]:
    """Load a dataset directory written by `save_dataset`.

    Args:
        path (str): The dataset directory.

    Raises:
        ArtifactMissingError: When the manifest is absent.
        DatasetError: When the manifest is corrupted or a listed tensor is
        missing or the wrong size.

    Returns:
        tuple[list[PairedSample], DatasetManifest]: The samples in manifest order
        and the manifest.
    """
    manifest = load_manifest(path)
    paired = set(manifest.paired_ids)
    ma_mod, mi_mod = manifest.majority_modality, manifest.minority_modality
    ma_shape, mi_shape = manifest.shape_of(ma_mod), manifest.shape_of(mi_mod)

    samples = []
    for sample_id in manifest.majority_ids:
        ma = read_tensor(os.path.join(path, tensor_name(ma_mod, sample_id)), ma_shape)
        mi = None
        if sample_id in paired:
            mi = read_tensor(
                os.path.join(path, tensor_name(mi_mod, sample_id)), mi_shape
            )
        samples.append(PairedSample(sample_id, ma, mi))

    _logger.debug("loaded %d samples from %s", len(samples), path)
    return samples, manifest


def stack_majority(samples: list[PairedSample]) -> np.ndarray:
    """Majority arrays of every sample, stacked on a new leading axis."""
    return np.stack([s.ma for s in samples])


def stack_pairs(samples: list[PairedSample]) -> tuple[np.ndarray, np.ndarray]:
    """Majority and minority arrays of the paired samples only."""
    pairs = [s for s in samples if s.paired]
    if not pairs:
        raise DatasetError("dataset has no paired samples")
    return np.stack([s.ma for s in pairs]), np.stack([s.mi for s in pairs])
