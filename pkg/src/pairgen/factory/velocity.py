"""Procedural layered velocity models: flat, curved and faulted families."""
from collections import namedtuple
from dataclasses import dataclass, replace
import enum
import logging
import math

import astropy.units as units
import numpy as np

from ..data import VelocityMap
from ..utils import to_si

_logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LayerModelParams:
    """Parameters of the layered-model generators.

    Ranges are inclusive (min, max) pairs. Distances are in grid cells except
    `spacing`, velocities in m/s, angles in degrees.
    """

    n_layers_range: tuple[int, int] = (2, 5)
    v_top_range: tuple[float, float] = (1500.0, 2500.0)
    v_increment_range: tuple[float, float] = (200.0, 800.0)
    curvature_amplitude: int = 0
    fault_throw_range: tuple[int, int] = (0, 0)
    fault_dip_range: tuple[float, float] = (80.0, 90.0)
    fault_position_range: tuple[float, float] = (0.3, 0.7)
    size: int = 32
    spacing: float = 10.0
    v_min: float = 1500.0
    v_max: float = 4500.0

    def __post_init__(self):
        # physical scalars may be given as astropy quantities or strings
        object.__setattr__(self, "spacing", to_si(self.spacing, units.m))
        object.__setattr__(self, "v_min", to_si(self.v_min, units.m / units.s))
        object.__setattr__(self, "v_max", to_si(self.v_max, units.m / units.s))

    def validate(self):
        """Check the parameter invariants.

        Raises:
            ValueError: When any parameter is out of its admissible range.
        """
        for name in (
            "n_layers_range",
            "v_top_range",
            "v_increment_range",
            "fault_throw_range",
            "fault_dip_range",
            "fault_position_range",
        ):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} must be (min, max), got {(lo, hi)}")

        if self.n_layers_range[0] < 1:
            raise ValueError(f"at least one layer is required, got {self.n_layers_range}")
        if self.v_top_range[0] <= 0:
            raise ValueError(f"v_top must be positive, got {self.v_top_range}")
        if self.v_top_range[0] < self.v_min or self.v_top_range[1] > self.v_max:
            raise ValueError(
                f"v_top_range {self.v_top_range} outside [{self.v_min}, {self.v_max}]"
            )
        if self.v_increment_range[0] < 0:
            raise ValueError(
                f"velocity increments must be non-negative, got {self.v_increment_range}"
            )
        if not 0 <= self.curvature_amplitude < self.size:
            raise ValueError(
                f"curvature_amplitude must be in [0, {self.size}), got "
                f"{self.curvature_amplitude}"
            )
        if self.fault_throw_range[0] < 0 or self.fault_throw_range[1] >= self.size:
            raise ValueError(
                f"fault throws must be in [0, {self.size}), got {self.fault_throw_range}"
            )
        if not (0 < self.fault_dip_range[0] and self.fault_dip_range[1] <= 90):
            raise ValueError(f"fault dip must be in (0, 90], got {self.fault_dip_range}")
        if not (0 <= self.fault_position_range[0] and self.fault_position_range[1] <= 1):
            raise ValueError(
                f"fault position is a width fraction, got {self.fault_position_range}"
            )

        slots = len(_interface_slots(self.size, self.curvature_amplitude))
        if self.n_layers_range[1] - 1 > slots:
            raise ValueError(
                f"{self.n_layers_range[1]} layers do not fit a {self.size}-row map "
                f"with curvature amplitude {self.curvature_amplitude}"
            )


def _interface_slots(size: int, amplitude: int) -> np.ndarray:
    return np.arange(2, size - amplitude - 1)


def _draw_layers(params: LayerModelParams, rng: np.random.Generator):
    """Draw layer velocities (top to bottom) and flat interface rows."""
    n_layers = int(rng.integers(params.n_layers_range[0], params.n_layers_range[1] + 1))
    v_top = float(rng.uniform(*params.v_top_range))
    increments = rng.uniform(*params.v_increment_range, size=n_layers - 1)

    # rescale rather than clip so every layer keeps a distinct velocity
    headroom = params.v_max - v_top
    total = float(increments.sum())
    if total > headroom and total > 0:
        increments = increments * (headroom / total)

    velocities = v_top + np.concatenate([[0.0], np.cumsum(increments)])
    velocities = np.minimum(velocities, params.v_max)

    slots = _interface_slots(params.size, params.curvature_amplitude)
    bases = np.sort(rng.choice(slots, size=n_layers - 1, replace=False))
    return velocities, bases


def _draw_offsets(params: LayerModelParams, rng: np.random.Generator) -> np.ndarray:
    """Non-constant integer column offsets in [0, amplitude] from a sum of sinusoids."""
    amplitude = params.curvature_amplitude
    x = np.arange(params.size) / (params.size - 1)

    offsets = np.zeros(params.size, dtype=int)
    for _ in range(16):
        n_terms = int(rng.integers(1, 4))
        cycles = rng.uniform(0.25, 1.0, size=n_terms)
        phases = rng.uniform(0.0, 2 * math.pi, size=n_terms)
        weights = rng.uniform(0.2, 1.0, size=n_terms)
        weights = weights / weights.sum()

        curve = np.sum(
            weights[:, None] * np.sin(2 * math.pi * cycles[:, None] * x + phases[:, None]),
            axis=0,
        )
        offsets = np.floor(amplitude / 2 * (1 + curve)).astype(int)
        offsets = np.clip(offsets, 0, amplitude)
        if offsets.min() != offsets.max():
            break
    return offsets


def _paint(params: LayerModelParams, velocities, bases, offsets) -> np.ndarray:
    rows = np.arange(params.size)
    grid = np.empty((params.size, params.size), dtype=np.float64)
    for col in range(params.size):
        layer = np.searchsorted(bases + offsets[col], rows, side="right")
        grid[:, col] = velocities[layer]
    return grid


def _layered(params: LayerModelParams, rng: np.random.Generator) -> np.ndarray:
    velocities, bases = _draw_layers(params, rng)
    if params.curvature_amplitude > 0:
        offsets = _draw_offsets(params, rng)
    else:
        offsets = np.zeros(params.size, dtype=int)
    return _paint(params, velocities, bases, offsets)


def _to_map(grid: np.ndarray, params: LayerModelParams) -> VelocityMap:
    return VelocityMap(grid.astype(np.float32), spacing=params.spacing)


def gen_flat(params: LayerModelParams, seed: int) -> VelocityMap:
    """Generate horizontally layered model.

    Each row holds a single velocity and velocity is non-decreasing with depth.

    Args:
        params (LayerModelParams): Generator parameters. The curvature amplitude only
        narrows the admissible interface rows, so flat and curved maps drawn with the
        same seed share their layers.
        seed (int): Random seed.

    Raises:
        ValueError: When the parameters are invalid.

    Returns:
        VelocityMap: The map.
    """
    params.validate()
    rng = np.random.default_rng(seed)
    velocities, bases = _draw_layers(params, rng)
    return _to_map(_paint(params, velocities, bases, np.zeros(params.size, int)), params)


def gen_curved(params: LayerModelParams, seed: int) -> VelocityMap:
    """Generate a model whose interfaces follow one shared smooth curve.

    Args:
        params (LayerModelParams): Generator parameters, `curvature_amplitude` in
        cells bounds the vertical excursion of every interface.
        seed (int): Random seed.

    Raises:
        ValueError: When the parameters are invalid.

    Returns:
        VelocityMap: The map. With a zero amplitude it equals `gen_flat` for the
        same seed.
    """
    params.validate()
    return _to_map(_layered(params, np.random.default_rng(seed)), params)


def apply_fault(grid: np.ndarray, throw: int, position: float, dip: float) -> np.ndarray:
    """Shear a map along a single fault line.

    Cells on the right of the line move down by `throw` rows. Cells exposed at the
    top take the value of the original top row in their column.

    Args:
        grid (np.ndarray): The H x W map.
        throw (int): Vertical displacement in rows, 0 leaves the map untouched.
        position (float): Column where the fault crosses mid-depth.
        dip (float): Fault dip in degrees, 90 is vertical.

    Raises:
        ValueError: When the throw is negative or the dip is outside (0, 90].

    Returns:
        np.ndarray: The faulted map.
    """
    grid = np.asarray(grid)
    throw = int(throw)
    if throw < 0:
        raise ValueError(f"fault throw must be non-negative, got {throw}")
    if not 0 < dip <= 90:
        raise ValueError(f"fault dip must be in (0, 90], got {dip}")
    if throw == 0:
        return grid.copy()

    height, width = grid.shape
    theta = math.radians(dip)
    rows = np.arange(height)
    trace = np.rint(position + (rows - height / 2) * math.cos(theta) / math.sin(theta))
    right = np.arange(width)[None, :] >= trace[:, None]

    shifted = np.empty_like(grid)
    shifted[throw:] = grid[:-throw] if throw < height else grid[:0]
    shifted[: min(throw, height)] = grid[0]
    return np.where(right, shifted, grid)


def gen_faulted(params: LayerModelParams, seed: int) -> VelocityMap:
    """Generate a layered model cut by one dipping fault.

    The layers are curved when `curvature_amplitude` is positive and flat otherwise.

    Args:
        params (LayerModelParams): Generator parameters.
        seed (int): Random seed.

    Raises:
        ValueError: When the parameters are invalid or the throw range cannot
        produce a fault.

    Returns:
        VelocityMap: The faulted map.
    """
    params.validate()
    if params.fault_throw_range[1] < 1:
        raise ValueError(
            f"faulted models need a maximum throw >= 1, got {params.fault_throw_range}"
        )

    rng = np.random.default_rng(seed)
    grid = _layered(params, rng)
    throw = int(rng.integers(params.fault_throw_range[0], params.fault_throw_range[1] + 1))
    position = float(rng.uniform(*params.fault_position_range)) * (params.size - 1)
    dip = float(rng.uniform(*params.fault_dip_range))
    return _to_map(apply_fault(grid, throw, position, dip), params)


class Family(str, enum.Enum):
    """Velocity-model families."""

    FLATVEL = "flatvel"
    CURVEVEL = "curvevel"
    FLATFAULT = "flatfault"
    CURVEFAULT = "curvefault"


def to_family(value: str | Family) -> Family:
    """Convert a string to a Family, ignoring case, dashes and underscores.

    Raises:
        ValueError: When the name matches no family.
    """
    if isinstance(value, Family):
        return value
    key = str(value).lower().replace("-", "").replace("_", "")
    for family in Family:
        if family.value == key:
            return family
    raise ValueError(f"Unknown velocity family {value}")


FamilyDefaults = namedtuple("FamilyDefaults", ["params", "learning_rate", "lr_decay"])

FAMILY_DEFAULTS = {
    Family.FLATVEL: FamilyDefaults(LayerModelParams(), 1e-4, 0.9),
    Family.CURVEVEL: FamilyDefaults(LayerModelParams(curvature_amplitude=6), 5e-4, 0.995),
    Family.FLATFAULT: FamilyDefaults(
        LayerModelParams(fault_throw_range=(3, 8)), 1e-4, 0.98
    ),
    Family.CURVEFAULT: FamilyDefaults(
        LayerModelParams(curvature_amplitude=6, fault_throw_range=(3, 8)), 5e-4, 0.995
    ),
}


def family_params(family: str | Family, **overrides) -> LayerModelParams:
    """Default generator parameters of a family, with optional field overrides."""
    return replace(FAMILY_DEFAULTS[to_family(family)].params, **overrides)


def gen_family(family: str | Family, params: LayerModelParams, seed: int) -> VelocityMap:
    """Generate one map of a family."""
    family = to_family(family)
    if family in (Family.FLATFAULT, Family.CURVEFAULT):
        return gen_faulted(params, seed)
    elif family == Family.CURVEVEL:
        return gen_curved(params, seed)
    else:
        return gen_flat(params, seed)


def gen_corpus(
    family: str | Family, count: int, params: LayerModelParams = None, seed: int = 0
) -> list[VelocityMap]:
    """Generate a corpus of maps from one family.

    Sample i is generated with seed `seed + i`, so any sample can be regenerated on
    its own.

    Args:
        family (str | Family): The family.
        count (int): Number of maps, at least 1.
        params (LayerModelParams, optional): Generator parameters. Defaults to the
        family defaults.
        seed (int, optional): Base seed. Defaults to 0.

    Raises:
        ValueError: When count < 1 or the parameters are invalid.

    Returns:
        list[VelocityMap]: The maps, in index order.
    """
    if count < 1:
        raise ValueError(f"corpus count must be >= 1, got {count}")
    family = to_family(family)
    params = params if params is not None else family_params(family)
    params.validate()

    _logger.debug("generating %d %s maps from seed %d", count, family.value, seed)
    return [gen_family(family, params, seed + i) for i in range(count)]
