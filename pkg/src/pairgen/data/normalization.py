"""Affine normalization of physical values to [-1, 1]."""
from dataclasses import dataclass

import numpy as np

from ._types import Modality, to_modality


@dataclass(frozen=True)
class NormalizationSpec:
    """Affine map x -> (x - shift) / scale for one modality."""

    modality: Modality
    shift: float
    scale: float

    def __post_init__(self):
        object.__setattr__(self, "modality", to_modality(self.modality))
        if not np.isfinite(self.scale) or self.scale <= 0:
            raise ValueError(f"normalization scale must be positive, got {self.scale}")
        if not np.isfinite(self.shift):
            raise ValueError(f"normalization shift must be finite, got {self.shift}")

    @staticmethod
    def from_range(modality: str | Modality, lo: float, hi: float):
        """Build the spec mapping [lo, hi] onto [-1, 1].

        Args:
            modality (str | Modality): The modality the spec applies to.
            lo (float): Physical value mapped to -1.
            hi (float): Physical value mapped to +1.

        Raises:
            ValueError: When hi <= lo.

        Returns:
            NormalizationSpec: The spec.
        """
        if not hi > lo:
            raise ValueError(f"empty normalization range [{lo}, {hi}]")
        return NormalizationSpec(
            modality, shift=(float(hi) + float(lo)) / 2, scale=(float(hi) - float(lo)) / 2
        )

    @staticmethod
    def fit(modality: str | Modality, data: np.ndarray):
        """Global min/max spec of a data collection."""
        data = np.asarray(data)
        lo, hi = float(data.min()), float(data.max())
        if hi == lo:
            hi = lo + 1.0
        return NormalizationSpec.from_range(modality, lo, hi)

    @property
    def range(self) -> tuple[float, float]:
        return (self.shift - self.scale, self.shift + self.scale)

    def to_dict(self) -> dict:
        return {"modality": self.modality.value, "shift": self.shift, "scale": self.scale}

    @staticmethod
    def from_dict(data: dict):
        return NormalizationSpec(data["modality"], data["shift"], data["scale"])


def _out_dtype(x: np.ndarray):
    return np.float64 if x.dtype == np.float64 else np.float32


def normalize(
    x: np.ndarray, spec: NormalizationSpec, modality: str | Modality = None
) -> np.ndarray:
    """Map physical values into the normalized range.

    Args:
        x (np.ndarray): Physical values.
        spec (NormalizationSpec): The modality's spec.
        modality (str|Modality, optional): When given, must match the spec's
        modality. Defaults to None.

    Raises:
        ValueError: When the modalities differ.

    Returns:
        np.ndarray: Values in [-1, 1] for in-range inputs; float64 inputs stay
        float64, anything else becomes float32.
    """
    if modality is not None and to_modality(modality) != spec.modality:
        raise ValueError(
            f"normalization spec is for {spec.modality.value}, not {modality}"
        )
    x = np.asarray(x)
    out = (x.astype(np.float64) - spec.shift) / spec.scale
    return out.astype(_out_dtype(x))


def denormalize(
    x: np.ndarray, spec: NormalizationSpec, modality: str | Modality = None
) -> np.ndarray:
    """Inverse of `normalize`."""
    if modality is not None and to_modality(modality) != spec.modality:
        raise ValueError(
            f"normalization spec is for {spec.modality.value}, not {modality}"
        )
    x = np.asarray(x)
    out = x.astype(np.float64) * spec.scale + spec.shift
    return out.astype(_out_dtype(x))
