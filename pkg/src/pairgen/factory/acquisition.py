"""Acquisition geometry, source wavelet and solver settings."""
from dataclasses import dataclass, field
import logging
import math

import astropy.units as units
import numpy as np

from ..data import VelocityMap
from ..errors import CFLError
from ..utils import to_si

_logger = logging.getLogger(__name__)

DEFAULT_SOURCE_COLUMNS = (4, 16, 27)


@dataclass(frozen=True)
class AcquisitionGeometry:
    """Source and receiver cells, all on one surface row.

    Attributes:
        source_positions (tuple[tuple[int, int], ...]): (row, col) of each source.
        receiver_positions (tuple[tuple[int, int], ...]): (row, col) of each receiver.
        interface_depth (float, optional): Reflector depth in meters, used only by
        travel-time checks.
    """

    source_positions: tuple = tuple((0, c) for c in DEFAULT_SOURCE_COLUMNS)
    receiver_positions: tuple = tuple((0, c) for c in range(32))
    interface_depth: float = None

    @staticmethod
    def surface(
        width: int = 32,
        source_columns: tuple[int, ...] = DEFAULT_SOURCE_COLUMNS,
        row: int = 0,
    ) -> "AcquisitionGeometry":
        """Sources at the given columns and a receiver at every column of `row`."""
        return AcquisitionGeometry(
            source_positions=tuple((row, int(c)) for c in source_columns),
            receiver_positions=tuple((row, c) for c in range(width)),
        )

    @property
    def n_sources(self) -> int:
        return len(self.source_positions)

    @property
    def n_receivers(self) -> int:
        return len(self.receiver_positions)

    def offset(self, source: int, receiver: int, spacing: float) -> float:
        """Source-receiver distance in meters."""
        (sr, sc), (rr, rc) = self.source_positions[source], self.receiver_positions[receiver]
        return math.hypot(sr - rr, sc - rc) * spacing

    def validate(self, shape: tuple[int, int]):
        """Check that every position lies inside the grid on a single surface row.

        Raises:
            ValueError: When a position is outside the grid or the rows differ.
        """
        if not self.source_positions or not self.receiver_positions:
            raise ValueError("geometry needs at least one source and one receiver")
        height, width = shape
        rows = set()
        for kind, positions in (
            ("source", self.source_positions),
            ("receiver", self.receiver_positions),
        ):
            for row, col in positions:
                if not (0 <= row < height and 0 <= col < width):
                    raise ValueError(f"{kind} position {(row, col)} outside grid {shape}")
                rows.add(row)
        if len(rows) != 1:
            raise ValueError(f"sources and receivers must share one row, got {sorted(rows)}")


@dataclass(frozen=True)
class Wavelet:
    """Source time function."""

    samples: np.ndarray
    dt: float
    f0: float
    t0: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or not np.all(np.isfinite(samples)):
            raise ValueError("wavelet samples must be a finite 1-D array")
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return len(self.samples)

    def scaled(self, factor: float) -> "Wavelet":
        """The same wavelet with amplitudes multiplied by `factor`."""
        return Wavelet(self.samples * factor, self.dt, self.f0, self.t0)


def ricker(
    f0: units.Quantity | float | str,
    dt: units.Quantity | float | str,
    nt: int,
) -> Wavelet:
    """Build a Ricker wavelet peaking at t0 = 1.5 / f0.

    Args:
        f0 (units.Quantity | float | str): Peak frequency, Hz when a bare number.
        dt (units.Quantity | float | str): Sample interval, seconds when a bare
        number.
        nt (int): Number of samples.

    Raises:
        ValueError: When f0 or dt is not positive, or `nt` samples cannot hold the
        main lobe.

    Returns:
        Wavelet: The wavelet, with value 1.0 at t0.
    """
    f0 = to_si(f0, units.Hz)
    dt = to_si(dt, units.s)
    if f0 <= 0 or dt <= 0:
        raise ValueError(f"f0 and dt must be positive, got f0={f0}, dt={dt}")

    t0 = 1.5 / f0
    if nt * dt < 2 * t0:
        raise ValueError(
            f"{nt} samples of {dt} s cannot contain the main lobe, need at least "
            f"{2 * t0} s"
        )

    arg = (math.pi * f0 * (np.arange(nt) * dt - t0)) ** 2
    return Wavelet((1.0 - 2.0 * arg) * np.exp(-arg), dt, f0, t0)


@dataclass(frozen=True)
class SolverConfig:
    """Finite-difference settings. The stencil is second order in space and time.

    Attributes:
        dt (float): Time step, seconds.
        nt (int): Number of time steps, equal to the recorded samples.
        sponge_width (int): Damping band width in cells, added outside the map on
        the left, right and bottom.
        sponge_strength (float): Peak damping coefficient at the outer edge.
        cfl_safety (float): Fraction of the stability limit allowed for dt.
    """

    dt: float = 1e-3
    nt: int = 256
    sponge_width: int = 15
    sponge_strength: float = 0.3
    cfl_safety: float = 0.9
    space_order: int = field(default=2, init=False)

    def __post_init__(self):
        object.__setattr__(self, "dt", to_si(self.dt, units.s))
        if self.dt <= 0 or self.nt < 1:
            raise ValueError(f"dt and nt must be positive, got dt={self.dt}, nt={self.nt}")
        if self.sponge_width < 0 or self.sponge_strength < 0:
            raise ValueError("sponge width and strength must be non-negative")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError(f"cfl_safety must be in (0, 1], got {self.cfl_safety}")


def max_stable_dt(vel: VelocityMap, cfg: SolverConfig) -> float:
    """Largest time step satisfying the 2-D second-order stability bound."""
    return cfg.cfl_safety * vel.spacing / (vel.v_max * math.sqrt(2.0))


def check_cfl(vel: VelocityMap, cfg: SolverConfig):
    """Verify the time step against the stability bound.

    Args:
        vel (VelocityMap): The velocity model.
        cfg (SolverConfig): Solver settings.

    Raises:
        CFLError: When dt exceeds cfl_safety * spacing / (max(v) * sqrt(2)); the
        error carries the admissible dt.
    """
    limit = max_stable_dt(vel, cfg)
    _logger.debug("CFL check dt=%g, max dt=%g", cfg.dt, limit)
    if cfg.dt > limit:
        raise CFLError(
            f"time step {cfg.dt:.6g} s exceeds the stability limit; dt must be <= "
            f"{limit:.6g} s for v_max={vel.v_max:g} m/s",
            limit,
        )
