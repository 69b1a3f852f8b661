"""Data model shared by every stage of the pipeline."""
from dataclasses import dataclass, field
import enum

import numpy as np

DEFAULT_MAP_SIZE = 32
DEFAULT_SEISMIC_SHAPE = (3, 256, 32)
FILE_PREFIX = {"velocity": "vel", "seismic": "seis"}


class Modality(str, enum.Enum):
    """The two data modalities."""

    VELOCITY = "velocity"
    SEISMIC = "seismic"

    @property
    def other(self) -> "Modality":
        """The opposite modality."""
        return Modality.SEISMIC if self is Modality.VELOCITY else Modality.VELOCITY

    @property
    def prefix(self) -> str:
        """File name prefix of this modality's tensors."""
        return FILE_PREFIX[self.value]


def to_modality(value: str | Modality) -> Modality:
    """Convert a string to a Modality.

    The strings "velocity", "vel", "v" map to `Modality.VELOCITY` and "seismic",
    "seis", "s" map to `Modality.SEISMIC`, regardless of case. This method is a no-op
    if a Modality is provided.

    Args:
        value (str | Modality): The value to convert.

    Raises:
        ValueError: When the string names no modality.

    Returns:
        Modality: The modality.
    """
    if isinstance(value, Modality):
        return value
    if value is None:
        raise ValueError("modality cannot be None")

    lvalue = str(value).lower()
    if lvalue in ("velocity", "vel", "v"):
        return Modality.VELOCITY
    elif lvalue in ("seismic", "seis", "s"):
        return Modality.SEISMIC
    else:
        raise ValueError(f"Invalid modality string {value}")


@dataclass(frozen=True)
class VelocityMap:
    """2-D subsurface wave-speed grid.

    Attributes:
        grid (np.ndarray): H x W wave speed in m/s, row 0 at the surface.
        spacing (float): Grid spacing in meters.
    """

    grid: np.ndarray
    spacing: float = 10.0

    def __post_init__(self):
        grid = np.asarray(self.grid)
        if grid.ndim != 2:
            raise ValueError(f"velocity grid must be 2-D, got shape {grid.shape}")
        if not np.all(np.isfinite(grid)) or np.any(grid <= 0):
            raise ValueError("velocity grid must be finite and strictly positive")
        if self.spacing <= 0:
            raise ValueError(f"grid spacing must be positive, got {self.spacing}")
        object.__setattr__(self, "grid", grid)

    @property
    def shape(self) -> tuple[int, int]:
        return self.grid.shape

    @property
    def v_max(self) -> float:
        return float(self.grid.max())

    def check(self, v_min: float, v_max: float, size: int = DEFAULT_MAP_SIZE):
        """Verify the map against the configured bounds and size.

        Args:
            v_min (float): Smallest admissible velocity, m/s.
            v_max (float): Largest admissible velocity, m/s.
            size (int, optional): Required height and width. Defaults to 32.

        Raises:
            ValueError: When a bound or the size is violated.
        """
        if self.grid.shape != (size, size):
            raise ValueError(
                f"velocity map shape {self.grid.shape} != configured ({size}, {size})"
            )
        lo, hi = float(self.grid.min()), float(self.grid.max())
        if lo < v_min or hi > v_max:
            raise ValueError(
                f"velocity range [{lo}, {hi}] outside bounds [{v_min}, {v_max}]"
            )


@dataclass(frozen=True)
class SeismicGather:
    """Recorded wavefield amplitudes, sources x time samples x receivers.

    Attributes:
        traces (np.ndarray): S x Tt x R amplitudes.
        dt (float): Time step between samples in seconds.
    """

    traces: np.ndarray
    dt: float = 1e-3

    def __post_init__(self):
        traces = np.asarray(self.traces)
        if traces.ndim != 3:
            raise ValueError(f"seismic traces must be 3-D, got shape {traces.shape}")
        if not np.all(np.isfinite(traces)):
            raise ValueError("seismic traces contain NaN or Inf")
        object.__setattr__(self, "traces", traces)

    @property
    def n_sources(self) -> int:
        return self.traces.shape[0]

    @property
    def n_times(self) -> int:
        return self.traces.shape[1]

    @property
    def n_receivers(self) -> int:
        return self.traces.shape[2]

    def check(self, shape: tuple[int, int, int] = DEFAULT_SEISMIC_SHAPE):
        """Verify the gather against the configured acquisition geometry.

        Args:
            shape (tuple[int, int, int], optional): Required (S, Tt, R). Defaults
            to (3, 256, 32).

        Raises:
            ValueError: When the shape differs.
        """
        if tuple(self.traces.shape) != tuple(shape):
            raise ValueError(
                f"seismic gather shape {self.traces.shape} != configured {tuple(shape)}"
            )


@dataclass(frozen=True)
class PairedSample:
    """One majority sample and, when paired, its minority counterpart.

    Attributes:
        id (int): Sample identifier.
        ma (np.ndarray): Majority-modality array.
        mi (np.ndarray, optional): Minority-modality array produced from the same
        velocity model, or None when unpaired.
    """

    id: int
    ma: np.ndarray
    mi: np.ndarray | None = None

    @property
    def paired(self) -> bool:
        return self.mi is not None


@dataclass
class DatasetManifest:
    """Unbalanced-split bookkeeping for a dataset directory."""

    majority_modality: Modality
    majority_ids: list[int]
    paired_ids: list[int]
    seed: int
    shapes: dict[str, list[int]] = field(
        default_factory=lambda: {
            "velocity": [DEFAULT_MAP_SIZE, DEFAULT_MAP_SIZE],
            "seismic": list(DEFAULT_SEISMIC_SHAPE),
        }
    )
    normalization: dict = field(default_factory=dict)
    dtype: str = "f32le"
    version: int = 1
    generated: bool = False
    config_digest: str | None = None
    attributes: dict = field(default_factory=dict)

    def __post_init__(self):
        self.majority_modality = to_modality(self.majority_modality)
        self.majority_ids = [int(i) for i in self.majority_ids]
        self.paired_ids = [int(i) for i in self.paired_ids]

    @property
    def minority_modality(self) -> Modality:
        return self.majority_modality.other

    @property
    def m(self) -> int:
        return len(self.majority_ids)

    @property
    def n(self) -> int:
        return len(self.paired_ids)

    def shape_of(self, modality: str | Modality) -> tuple[int, ...]:
        """The stored shape of one modality's tensors."""
        return tuple(self.shapes[to_modality(modality).value])

    def validate(self):
        """Check the manifest invariants.

        Raises:
            ValueError: When ids repeat, paired ids are not a subset of the
            majority ids, or a shape is missing.
        """
        if len(set(self.majority_ids)) != len(self.majority_ids):
            raise ValueError("majority_ids contains duplicates")
        if len(set(self.paired_ids)) != len(self.paired_ids):
            raise ValueError("paired_ids contains duplicates")
        extra = set(self.paired_ids) - set(self.majority_ids)
        if extra:
            raise ValueError(
                f"paired_ids must be a subset of majority_ids; unknown ids "
                f"{sorted(extra)[:5]}"
            )
        for modality in Modality:
            if modality.value not in self.shapes:
                raise ValueError(f"manifest has no shape for {modality.value}")
        if self.dtype != "f32le":
            raise ValueError(f"unsupported dtype {self.dtype}")

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "majority_modality": self.majority_modality.value,
            "shapes": {k: list(v) for k, v in self.shapes.items()},
            "dtype": self.dtype,
            "majority_ids": list(self.majority_ids),
            "paired_ids": list(self.paired_ids),
            "normalization": {k: v.to_dict() for k, v in self.normalization.items()},
            "seed": self.seed,
            "generated": self.generated,
            "config_digest": self.config_digest,
            "attributes": dict(self.attributes),
        }

    @staticmethod
    def from_dict(data: dict) -> "DatasetManifest":
        from .normalization import NormalizationSpec

        missing = [
            k
            for k in ("version", "majority_modality", "shapes", "dtype")
            + ("majority_ids", "paired_ids", "normalization", "seed")
            if k not in data
        ]
        if missing:
            raise ValueError(f"manifest is missing keys {missing}")

        return DatasetManifest(
            majority_modality=data["majority_modality"],
            majority_ids=data["majority_ids"],
            paired_ids=data["paired_ids"],
            seed=data["seed"],
            shapes={k: list(v) for k, v in data["shapes"].items()},
            normalization={
                k: NormalizationSpec.from_dict(v)
                for k, v in data["normalization"].items()
            },
            dtype=data["dtype"],
            version=data["version"],
            generated=data.get("generated", False),
            config_digest=data.get("config_digest"),
            attributes=data.get("attributes", {}),
        )
