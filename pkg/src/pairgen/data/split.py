"""Unbalanced majority/minority split."""
from typing import Sequence

import numpy as np

from ._types import DatasetManifest, Modality


def split_unbalanced(
    ids: Sequence[int],
    n_paired: int,
    seed: int,
    majority_modality: str | Modality = Modality.VELOCITY,
    shapes: dict = None,
) -> DatasetManifest:
    """Choose which majority samples also carry the minority modality.

    Args:
        ids (Sequence[int]): Identifiers of the m majority samples.
        n_paired (int): Number n of paired samples to draw.
        seed (int): Split seed; the result is a pure function of (ids, n_paired,
        seed).
        majority_modality (str|Modality, optional): The abundant modality.
        Defaults to velocity.
        shapes (dict, optional): Tensor shapes per modality. Defaults to the desk
        shapes.

    Raises:
        ValueError: When n_paired is negative or exceeds the number of ids.

    Returns:
        DatasetManifest: Manifest whose paired ids are a uniform random subset of
        size n_paired, listed in the order they appear in `ids`.
    """
    ids = [int(i) for i in ids]
    if n_paired < 0 or n_paired > len(ids):
        raise ValueError(
            f"n_paired must be within [0, {len(ids)}], got {n_paired}"
        )

    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(len(ids), size=n_paired, replace=False))
    kwargs = {} if shapes is None else {"shapes": shapes}

    manifest = DatasetManifest(
        majority_modality=majority_modality,
        majority_ids=ids,
        paired_ids=[ids[i] for i in chosen],
        seed=seed,
        **kwargs,
    )
    manifest.validate()
    return manifest
