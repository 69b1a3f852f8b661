"""PNG heatmaps of velocity maps and seismic gathers."""
import logging
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .data import Modality, PairedSample, to_modality  # noqa: E402

_logger = logging.getLogger(__name__)

_CMAPS = {Modality.VELOCITY: "viridis", Modality.SEISMIC: "gray"}


def color_limits(arrays, modality: str | Modality) -> tuple[float, float]:
    """Shared (vmin, vmax) for a modality; seismic limits are symmetric about zero."""
    modality = to_modality(modality)
    values = np.concatenate([np.ravel(a) for a in arrays])
    if modality == Modality.SEISMIC:
        peak = float(np.max(np.abs(values))) or 1.0
        return -peak, peak
    lo, hi = float(values.min()), float(values.max())
    return (lo, hi) if hi > lo else (lo - 0.5, hi + 0.5)


def _heatmap(image: np.ndarray, fname: str, title: str, cmap: str, limits, label: str):
    fig, ax = plt.subplots(figsize=(4, 4))
    try:
        im = ax.imshow(image, cmap=cmap, vmin=limits[0], vmax=limits[1], aspect="auto")
        fig.colorbar(im, ax=ax, label=label)
        ax.set_title(title)
        fig.savefig(fname, format="png", dpi=100, metadata={"Software": None})
    finally:
        plt.close(fig)


def plot_samples(
    samples: list[PairedSample],
    indices: list[int],
    majority_modality: str | Modality,
    out: str,
) -> list[str]:
    """Write one velocity heatmap and one heatmap per seismic source channel per sample.

    Colors are shared across every plotted sample of the same modality.

    Args:
        samples (list[PairedSample]): Dataset samples.
        indices (list[int]): Positions in `samples` to plot.
        majority_modality (str | Modality): Modality held in `PairedSample.ma`.
        out (str): Output directory, created when missing.

    Raises:
        IndexError: When an index is out of range.

    Returns:
        list[str]: The written files, in plotting order.
    """
    majority = to_modality(majority_modality)
    for i in indices:
        if not 0 <= i < len(samples):
            raise IndexError(f"sample index {i} out of range [0, {len(samples)})")
    os.makedirs(out, exist_ok=True)

    chosen = [samples[i] for i in indices]
    by_mod = {Modality.VELOCITY: [], Modality.SEISMIC: []}
    for s in chosen:
        by_mod[majority].append(s.ma)
        if s.paired:
            by_mod[majority.other].append(s.mi)
    limits = {m: color_limits(a, m) for m, a in by_mod.items() if a}

    written = []
    for s in chosen:
        arrays = {majority: s.ma}
        if s.paired:
            arrays[majority.other] = s.mi

        if Modality.VELOCITY in arrays:
            fname = os.path.join(out, f"sample_{s.id:06d}_velocity.png")
            _heatmap(
                arrays[Modality.VELOCITY], fname, f"velocity {s.id}",
                _CMAPS[Modality.VELOCITY], limits[Modality.VELOCITY], "m/s",
            )
            written.append(fname)
        if Modality.SEISMIC in arrays:
            for k, channel in enumerate(arrays[Modality.SEISMIC]):
                fname = os.path.join(out, f"sample_{s.id:06d}_seismic_{k}.png")
                _heatmap(
                    channel, fname, f"seismic {s.id} source {k}",
                    _CMAPS[Modality.SEISMIC], limits[Modality.SEISMIC], "amplitude",
                )
                written.append(fname)

    _logger.info("wrote %d images to %s", len(written), out)
    return written
