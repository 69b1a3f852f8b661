from ._types import (
    DEFAULT_MAP_SIZE,
    DEFAULT_SEISMIC_SHAPE,
    DatasetManifest,
    Modality,
    PairedSample,
    SeismicGather,
    VelocityMap,
    to_modality,
)
from .normalization import NormalizationSpec, normalize, denormalize
from .split import split_unbalanced
from .container import (
    load_dataset,
    load_manifest,
    save_dataset,
    stack_majority,
    stack_pairs,
)
from .checkpoints import load_checkpoint, save_checkpoint
