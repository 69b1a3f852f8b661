"""Physics axis: misfit between a gather and the forward modeling of its map."""
from collections import namedtuple
import logging

import numpy as np

from ..data import SeismicGather, VelocityMap
from ..errors import CFLError
from ..factory import AcquisitionGeometry, SolverConfig, Wavelet, simulate

_logger = logging.getLogger(__name__)

PhysicsSummary = namedtuple("PhysicsSummary", ["mean", "median", "skipped", "count", "residuals"])


def physics_residual(
    vel_gen: VelocityMap,
    seis_gen: SeismicGather,
    geom: AcquisitionGeometry,
    wav: Wavelet,
    cfg: SolverConfig,
) -> float:
    """Normalized misfit |simulate(vel) - seis| / |simulate(vel)|.

    Args:
        vel_gen (VelocityMap): Velocity map in m/s.
        seis_gen (SeismicGather): Gather in raw pressure units.
        geom (AcquisitionGeometry): Acquisition used to model it.
        wav (Wavelet): Source wavelet.
        cfg (SolverConfig): Solver settings.

    Raises:
        CFLError: When the map is not stable under `cfg.dt`.
        ValueError: When the shapes disagree or the simulated gather is all zero.

    Returns:
        float: 0 for a perfectly consistent pair, 1 for an all-zero gather.
    """
    sim = simulate(vel_gen, geom, wav, cfg).traces.astype(np.float64)
    seis = np.asarray(seis_gen.traces, dtype=np.float64)
    if sim.shape != seis.shape:
        raise ValueError(f"gather shape {seis.shape} does not match simulation {sim.shape}")
    norm = np.linalg.norm(sim)
    if norm == 0:
        raise ValueError("simulated gather is identically zero")
    return float(np.linalg.norm(sim - seis) / norm)


def physics_aggregate(
    pairs,
    geom: AcquisitionGeometry,
    wav: Wavelet,
    cfg: SolverConfig,
    spacing: float = 10.0,
) -> PhysicsSummary:
    """Residuals over (velocity, gather) pairs.

    Pairs may hold `VelocityMap`/`SeismicGather` objects or raw arrays in m/s and
    pressure units. Maps that are not valid velocity models or violate the
    stability bound are logged and skipped.

    Returns:
        PhysicsSummary: mean, median, skipped count, scored count and the residuals.
    """
    residuals, skipped = [], 0
    for i, (vel, seis) in enumerate(pairs):
        try:
            if not isinstance(vel, VelocityMap):
                vel = VelocityMap(np.asarray(vel, dtype=np.float64), spacing)
            if not isinstance(seis, SeismicGather):
                seis = SeismicGather(np.asarray(seis), cfg.dt)
        except ValueError as e:
            skipped += 1
            _logger.warning("skipping sample %d, not a valid pair: %s", i, e)
            continue
        try:
            residuals.append(physics_residual(vel, seis, geom, wav, cfg))
        except CFLError as e:
            skipped += 1
            _logger.warning("skipping sample %d: %s", i, e)

    if residuals:
        mean, median = float(np.mean(residuals)), float(np.median(residuals))
    else:
        mean = median = float("nan")
    return PhysicsSummary(mean, median, skipped, len(residuals), residuals)
