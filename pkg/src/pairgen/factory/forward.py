"""2-D constant-density acoustic finite-difference modeling."""
from collections import namedtuple
from concurrent.futures import ProcessPoolExecutor
import logging
import os

import numpy as np
from scipy.signal import hilbert

from ..data import SeismicGather, VelocityMap
from ..errors import CFLError, NumericalError
from .acquisition import AcquisitionGeometry, SolverConfig, Wavelet, check_cfl

_logger = logging.getLogger(__name__)

Propagation = namedtuple("Propagation", ["traces", "energy"])


def _laplacian(p: np.ndarray) -> np.ndarray:
    """Unscaled 5-point Laplacian over the last two axes.

    The row above row 0 mirrors it with opposite sign (pressure-free surface); all
    other outer neighbors are zero.
    """
    lap = -4.0 * p
    lap[:, 1:, :] += p[:, :-1, :]
    lap[:, 0, :] -= p[:, 0, :]
    lap[:, :-1, :] += p[:, 1:, :]
    lap[:, :, 1:] += p[:, :, :-1]
    lap[:, :, :-1] += p[:, :, 1:]
    return lap


def _sponge(shape: tuple[int, int], width: int, strength: float) -> np.ndarray:
    """Per-cell damping coefficient on the padded grid, zero inside the map."""
    height, total_width = shape
    if width == 0 or strength == 0:
        return np.zeros(shape)

    rows = np.arange(height)
    cols = np.arange(total_width)
    inner_height, inner_width = height - width, total_width - 2 * width
    dz = np.clip(rows - (inner_height - 1), 0, None)
    dx = np.maximum(np.clip(width - cols, 0, None), np.clip(cols - (width + inner_width - 1), 0, None))
    dist = np.maximum(dz[:, None], dx[None, :]) / width
    return 0.5 * strength * dist**2


def propagate(
    vel: VelocityMap, geom: AcquisitionGeometry, wav: Wavelet, cfg: SolverConfig
) -> Propagation:
    """Run the wave equation for every source and record the receivers.

    All sources are stepped together as one batch. At step k the recorded sample is
    the pressure before the update, so index 0 is always zero.

    Args:
        vel (VelocityMap): The velocity model.
        geom (AcquisitionGeometry): Sources and receivers.
        wav (Wavelet): Source time function, at most `cfg.nt` samples.
        cfg (SolverConfig): Solver settings.

    Raises:
        CFLError: When the time step is unstable for this model.
        ValueError: When the geometry or wavelet does not fit.
        NumericalError: When a non-finite pressure appears, naming the step.

    Returns:
        Propagation: traces (S x nt x R) and the discrete wavefield energy at every
        step (nt).
    """
    check_cfl(vel, cfg)
    height, width = vel.shape
    geom.validate(vel.shape)
    if cfg.sponge_width >= height / 2:
        raise ValueError(
            f"sponge_width {cfg.sponge_width} must be smaller than half the map "
            f"height {height}"
        )
    if len(wav) > cfg.nt:
        raise ValueError(f"wavelet has {len(wav)} samples, more than nt={cfg.nt}")

    w = cfg.sponge_width
    v = np.pad(vel.grid.astype(np.float64), ((0, w), (w, w)), mode="edge")
    c2 = (v * cfg.dt / vel.spacing) ** 2
    damp = _sponge(v.shape, w, cfg.sponge_strength)

    source = np.zeros(cfg.nt)
    source[: len(wav)] = wav.samples

    n_src = geom.n_sources
    src_rows = np.array([r for r, _ in geom.source_positions])
    src_cols = np.array([c for _, c in geom.source_positions]) + w
    rec_rows = np.array([r for r, _ in geom.receiver_positions])
    rec_cols = np.array([c for _, c in geom.receiver_positions]) + w
    src_c2 = c2[src_rows, src_cols]
    batch = np.arange(n_src)

    prev = np.zeros((n_src,) + v.shape)
    cur = np.zeros_like(prev)
    traces = np.zeros((n_src, cfg.nt, geom.n_receivers))
    energy = np.zeros(cfg.nt)

    for k in range(cfg.nt):
        traces[:, k, :] = cur[:, rec_rows, rec_cols]

        lap = _laplacian(cur)
        nxt = 2.0 * cur - (1.0 - damp) * prev + c2 * lap
        nxt[batch, src_rows, src_cols] += src_c2 * source[k]
        nxt /= 1.0 + damp

        if not np.all(np.isfinite(nxt)):
            raise NumericalError(f"non-finite pressure at step {k}")

        energy[k] = np.sum((nxt - cur) ** 2 / c2) - np.sum(nxt * lap)
        prev, cur = cur, nxt

    return Propagation(traces, energy)


def simulate(
    vel: VelocityMap, geom: AcquisitionGeometry, wav: Wavelet, cfg: SolverConfig
) -> SeismicGather:
    """Forward-model one velocity map into a seismic gather.

    The result is linear in the wavelet and deterministic.

    Args:
        vel (VelocityMap): The velocity model.
        geom (AcquisitionGeometry): Sources and receivers.
        wav (Wavelet): Source time function.
        cfg (SolverConfig): Solver settings.

    Raises:
        CFLError: When the time step is unstable for this model.
        NumericalError: When a non-finite pressure appears.

    Returns:
        SeismicGather: float32 traces, sources x time x receivers.
    """
    result = propagate(vel, geom, wav, cfg)
    return SeismicGather(result.traces.astype(np.float32), dt=cfg.dt)


def pick_arrival(trace: np.ndarray, dt: float, window: tuple[float, float] = None) -> float:
    """Time of the envelope peak of a trace.

    Args:
        trace (np.ndarray): 1-D trace.
        dt (float): Sample interval, seconds.
        window (tuple[float, float], optional): Search only between these times,
        seconds. Defaults to None, the whole trace.

    Returns:
        float: The arrival time in seconds.
    """
    envelope = np.abs(hilbert(np.asarray(trace, dtype=np.float64)))
    lo, hi = 0, len(envelope)
    if window is not None:
        lo = max(0, int(np.floor(window[0] / dt)))
        hi = min(len(envelope), int(np.ceil(window[1] / dt)) + 1)
        if hi <= lo:
            raise ValueError(f"empty pick window {window}")
    return (lo + int(np.argmax(envelope[lo:hi]))) * dt


def _with_index(index: int, err: Exception) -> Exception:
    message = f"sample {index}: {err}"
    if isinstance(err, CFLError):
        return CFLError(message, err.max_dt)
    elif isinstance(err, NumericalError):
        return NumericalError(message)
    elif isinstance(err, ValueError):
        return ValueError(message)
    return err


def worker_count() -> int:
    """Process count for forward modeling, from PAIRGEN_WORKERS (default 1)."""
    try:
        return max(1, int(os.getenv("PAIRGEN_WORKERS", "1")))
    except ValueError:
        raise ValueError(
            f"PAIRGEN_WORKERS must be an integer, got {os.getenv('PAIRGEN_WORKERS')}"
        )


def forward_corpus(
    vels: list[VelocityMap],
    geom: AcquisitionGeometry,
    wav: Wavelet,
    cfg: SolverConfig,
    workers: int = None,
) -> list[SeismicGather]:
    """Forward-model every map, preserving order.

    Args:
        vels (list[VelocityMap]): Maps sharing one shape.
        geom (AcquisitionGeometry): Sources and receivers.
        wav (Wavelet): Source time function.
        cfg (SolverConfig): Solver settings.
        workers (int, optional): Process count. Defaults to PAIRGEN_WORKERS.

    Raises:
        ValueError: When the maps differ in shape.
        CFLError, NumericalError: From `simulate`, with the sample index prepended.

    Returns:
        list[SeismicGather]: One gather per map.
    """
    shapes = {v.shape for v in vels}
    if len(shapes) > 1:
        raise ValueError(f"all velocity maps must share one shape, got {sorted(shapes)}")

    workers = worker_count() if workers is None else max(1, int(workers))
    _logger.debug("forward modeling %d maps on %d workers", len(vels), workers)

    if workers == 1 or len(vels) <= 1:
        gathers = []
        for i, vel in enumerate(vels):
            try:
                gathers.append(simulate(vel, geom, wav, cfg))
            except Exception as e:
                raise _with_index(i, e) from e
        return gathers

    with ProcessPoolExecutor(max_workers=workers) as executor:
        futures = [executor.submit(simulate, vel, geom, wav, cfg) for vel in vels]
        gathers = []
        for i, future in enumerate(futures):
            try:
                gathers.append(future.result())
            except Exception as e:
                raise _with_index(i, e) from e
        return gathers
