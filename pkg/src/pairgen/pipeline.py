"""Stage functions shared by the command line and the experiment drivers.

They work on in-memory samples; artifact paths are handled by the callers.
"""
import logging

import numpy as np

from .config import RunConfig, config_digest
from .data import (
    DatasetManifest,
    Modality,
    NormalizationSpec,
    PairedSample,
    denormalize,
    normalize,
    split_unbalanced,
    to_modality,
)
from .factory import forward_corpus, gen_corpus

_logger = logging.getLogger(__name__)

SYNTH_SECTIONS = ("data", "synth", "forward")


def synthesize(cfg: RunConfig) -> tuple[list[PairedSample], DatasetManifest]:
    """Build an unbalanced corpus in physical units.

    Every map is generated; gathers are forward-modeled for the paired subset, or for
    every sample when seismic is the majority modality.

    Raises:
        ValueError: When a parameter is invalid.
        CFLError, NumericalError: From forward modeling, naming the sample.

    Returns:
        tuple[list[PairedSample], DatasetManifest]: Raw samples and their manifest,
        carrying min/max normalization of each modality present.
    """
    majority = to_modality(cfg.data.majority_modality)
    params = cfg.synth.layer_params()
    count = cfg.data.count

    _logger.info(
        "synthesizing %d %s maps, %d paired", count, cfg.synth.family, cfg.data.n_paired
    )
    vels = gen_corpus(cfg.synth.family, count, params, cfg.stage_seed("synth"))
    shapes = {
        Modality.VELOCITY.value: [params.size, params.size],
        Modality.SEISMIC.value: [len(cfg.forward.source_columns), cfg.forward.nt, params.size],
    }
    manifest = split_unbalanced(
        range(count), cfg.data.n_paired, cfg.stage_seed("split"), majority, shapes
    )

    paired = set(manifest.paired_ids)
    modeled = list(range(count)) if majority == Modality.SEISMIC else sorted(paired)
    gathers = {}
    if modeled:
        traces = forward_corpus(
            [vels[i] for i in modeled],
            cfg.forward.geometry(params.size),
            cfg.forward.wavelet(),
            cfg.forward.solver(),
        )
        gathers = {i: g.traces for i, g in zip(modeled, traces)}

    grids = {i: vels[i].grid for i in range(count)}
    manifest.normalization[Modality.VELOCITY.value] = NormalizationSpec.fit(
        Modality.VELOCITY, np.stack(list(grids.values()))
    )
    if gathers:
        manifest.normalization[Modality.SEISMIC.value] = NormalizationSpec.fit(
            Modality.SEISMIC, np.stack(list(gathers.values()))
        )
    manifest.config_digest = config_digest(cfg, *SYNTH_SECTIONS)
    manifest.attributes = {"family": cfg.synth.family, "spacing": params.spacing}

    by_mod = {Modality.VELOCITY: grids, Modality.SEISMIC: gathers}
    samples = [
        PairedSample(
            i,
            by_mod[majority][i],
            by_mod[majority.other][i] if i in paired else None,
        )
        for i in range(count)
    ]
    return samples, manifest


def _spec(manifest: DatasetManifest, modality: Modality) -> NormalizationSpec:
    try:
        return manifest.normalization[modality.value]
    except KeyError:
        raise ValueError(f"dataset has no {modality.value} normalization") from None


def normalize_samples(
    samples: list[PairedSample], manifest: DatasetManifest, norm: dict = None
) -> list[PairedSample]:
    """Samples mapped to [-1, 1] with `norm` (defaults to the manifest's specs)."""
    norm = norm if norm is not None else manifest.normalization
    ma_mod, mi_mod = manifest.majority_modality, manifest.minority_modality
    ma_spec = norm[ma_mod.value]
    mi_spec = norm.get(mi_mod.value)
    if mi_spec is None and any(s.paired for s in samples):
        raise ValueError(f"dataset has no {mi_mod.value} normalization")
    return [
        PairedSample(
            s.id,
            normalize(s.ma, ma_spec),
            normalize(s.mi, mi_spec) if s.paired else None,
        )
        for s in samples
    ]


def denormalize_pairs(
    pairs: list[tuple[np.ndarray, np.ndarray]],
    norm: dict,
    majority_modality: str | Modality,
    start_id: int = 0,
) -> list[PairedSample]:
    """Turn normalized (velocity, seismic) pairs into raw paired samples."""
    majority = to_modality(majority_modality)
    v_spec = norm[Modality.VELOCITY.value]
    s_spec = norm[Modality.SEISMIC.value]
    samples = []
    for k, (vel, seis) in enumerate(pairs):
        arrays = {
            Modality.VELOCITY: denormalize(vel, v_spec).astype(np.float32),
            Modality.SEISMIC: denormalize(seis, s_spec).astype(np.float32),
        }
        samples.append(PairedSample(start_id + k, arrays[majority], arrays[majority.other]))
    return samples


def generated_manifest(
    count: int,
    norm: dict,
    majority_modality: str | Modality,
    shapes: dict,
    seed: int,
    digest: str = None,
    attributes: dict = None,
) -> DatasetManifest:
    """Manifest of a fully paired generated dataset."""
    ids = list(range(count))
    return DatasetManifest(
        majority_modality=majority_modality,
        majority_ids=ids,
        paired_ids=ids,
        seed=seed,
        shapes={k: list(v) for k, v in shapes.items()},
        normalization=dict(norm),
        generated=True,
        config_digest=digest,
        attributes=dict(attributes or {}),
    )


def modality_arrays(
    samples: list[PairedSample], manifest: DatasetManifest, modality: str | Modality
) -> list[np.ndarray]:
    """Arrays of one modality: every sample for the majority, paired ones otherwise."""
    modality = to_modality(modality)
    if modality == manifest.majority_modality:
        return [s.ma for s in samples]
    return [s.mi for s in samples if s.paired]


def norm_from_metadata(meta: dict) -> dict:
    """Normalization specs stored in checkpoint metadata."""
    return {k: NormalizationSpec.from_dict(v) for k, v in meta.get("normalization", {}).items()}


def norm_to_metadata(norm: dict) -> dict:
    return {k: v.to_dict() for k, v in norm.items()}
