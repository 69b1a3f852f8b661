"""Feature extraction and Frechet distance between Gaussian feature fits."""
from dataclasses import dataclass
import enum
import logging
import math

import numpy as np
from scipy import linalg
import torch
import torch.nn.functional as F

from ..data import Modality, to_modality
from ..errors import NumericalError

_logger = logging.getLogger(__name__)

RIDGE = 1e-6
NEGATIVE_TOLERANCE = 1e-6


class ExtractorKind(str, enum.Enum):
    FIXED_RANDOM_CONV = "fixed_random_conv"
    TRAINED_ENCODER = "trained_encoder"


@dataclass(frozen=True)
class FeatureExtractorSpec:
    """Which features FID is computed on.

    Attributes:
        modality (str): "velocity" or "seismic".
        kind (str): "fixed_random_conv", a seed-fixed untrained convolution stack,
        or "trained_encoder", the co-latent of a trained network.
        feature_dim (int): Output width of the random extractor.
        seed (int): Weight seed of the random extractor.
    """

    modality: str = "velocity"
    kind: str = ExtractorKind.FIXED_RANDOM_CONV.value
    feature_dim: int = 64
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "modality", to_modality(self.modality).value)
        object.__setattr__(self, "kind", ExtractorKind(self.kind).value)
        if self.feature_dim < 2:
            raise ValueError(f"feature_dim must be >= 2, got {self.feature_dim}")


@dataclass(frozen=True)
class GaussianStats:
    """Mean and covariance of a feature matrix."""

    mean: np.ndarray
    cov: np.ndarray

    @staticmethod
    def from_features(features: np.ndarray) -> "GaussianStats":
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or len(features) < 2:
            raise ValueError(f"need an N x d feature matrix with N >= 2, got {features.shape}")
        cov = np.cov(features, rowvar=False).reshape(features.shape[1], features.shape[1])
        return GaussianStats(features.mean(axis=0), (cov + cov.T) / 2)

    @property
    def dim(self) -> int:
        return len(self.mean)


def _random_weights(g: torch.Generator, cout: int, cin: int) -> torch.Tensor:
    fan_in = cin * 9
    return torch.randn(cout, cin, 3, 3, generator=g, dtype=torch.float32) * math.sqrt(2.0 / fan_in)


class RandomConvFeatures:
    """Three stride-2 ReLU convolutions with seed-fixed weights and global average pooling."""

    def __init__(self, in_channels: int, feature_dim: int, seed: int):
        g = torch.Generator().manual_seed(int(seed))
        widths = [in_channels, 16, 32, feature_dim]
        self.weights = [_random_weights(g, widths[i + 1], widths[i]) for i in range(3)]

    @torch.no_grad()
    def __call__(self, x: torch.Tensor) -> torch.Tensor:
        for w in self.weights:
            x = F.relu(F.conv2d(x, w, stride=2, padding=1))
        return x.mean(dim=(2, 3))


def _stack(data, modality: Modality) -> np.ndarray:
    if len(data) == 0:
        raise ValueError("cannot extract features from an empty dataset")
    try:
        x = np.stack([np.asarray(d, dtype=np.float32) for d in data])
    except ValueError as e:
        raise ValueError(f"inputs do not share one shape: {e}") from e
    expected = 3 if modality == Modality.VELOCITY else 4
    if x.ndim != expected:
        raise ValueError(
            f"{modality.value} samples must be {expected - 1}-D, got shape {x.shape[1:]}"
        )
    return x


def extract_features(
    data, spec: FeatureExtractorSpec, net=None, batch_size: int = 256
) -> np.ndarray:
    """Map samples of one modality to feature vectors.

    Args:
        data: N normalized arrays (H x W maps or S x Tt x R gathers).
        spec (FeatureExtractorSpec): Extractor settings.
        net (TwoHeadNet, optional): Required by the trained_encoder kind, whose
        majority modality must match `spec.modality`.
        batch_size (int, optional): Samples per forward pass. Defaults to 256.

    Raises:
        ValueError: When the data is empty, ragged, or has the wrong rank, or the
        trained encoder does not accept the modality.

    Returns:
        np.ndarray: N x feature_dim features (N x c for the trained encoder).
    """
    modality = to_modality(spec.modality)
    x = _stack(data, modality)

    if spec.kind == ExtractorKind.TRAINED_ENCODER.value:
        if net is None or net.majority != modality:
            raise ValueError(f"the trained encoder does not accept {modality.value} inputs")
        net.eval()
        device = next(net.parameters()).device

        def extractor(batch):
            with torch.no_grad():
                return net.encode(batch.to(device)).cpu()

    else:
        channels = 1 if modality == Modality.VELOCITY else x.shape[1]
        extractor = RandomConvFeatures(channels, spec.feature_dim, spec.seed)

    if modality == Modality.VELOCITY and spec.kind == ExtractorKind.FIXED_RANDOM_CONV.value:
        x = x[:, None]

    chunks = [
        extractor(torch.from_numpy(x[i : i + batch_size])).double().numpy()
        for i in range(0, len(x), batch_size)
    ]
    return np.concatenate(chunks)


def _psd_eigenvalues(matrix: np.ndarray, what: str) -> tuple[np.ndarray, np.ndarray]:
    values, vectors = linalg.eigh((matrix + matrix.T) / 2)
    if values.min() < -NEGATIVE_TOLERANCE:
        raise NumericalError(
            f"{what} is not positive semi-definite (eigenvalue {values.min():.3g})"
        )
    return np.clip(values, 0.0, None), vectors


def fid(a: GaussianStats, b: GaussianStats) -> float:
    """Frechet distance |mu_a - mu_b|^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2)).

    The trace of the square root is taken from the eigenvalues of the symmetric
    matrix S_a^(1/2) S_b S_a^(1/2). A 1e-6 ridge is added to both covariances
    only when one of them is not safely positive definite.

    Raises:
        ValueError: When the feature dimensions differ.
        NumericalError: When a covariance has an eigenvalue below -1e-6.
    """
    if a.dim != b.dim or a.cov.shape != b.cov.shape:
        raise ValueError(f"feature dimensions differ: {a.dim} vs {b.dim}")

    cov_a, cov_b = np.asarray(a.cov, np.float64), np.asarray(b.cov, np.float64)
    wa, _ = _psd_eigenvalues(cov_a, "first covariance")
    wb, _ = _psd_eigenvalues(cov_b, "second covariance")
    if min(wa.min(), wb.min()) < RIDGE:
        eye = np.eye(a.dim)
        cov_a, cov_b = cov_a + RIDGE * eye, cov_b + RIDGE * eye

    wa, va = _psd_eigenvalues(cov_a, "first covariance")
    root_a = (va * np.sqrt(wa)) @ va.T
    wm, _ = _psd_eigenvalues(root_a @ cov_b @ root_a, "covariance product")

    diff = np.asarray(a.mean, np.float64) - np.asarray(b.mean, np.float64)
    value = diff @ diff + np.trace(cov_a) + np.trace(cov_b) - 2.0 * np.sum(np.sqrt(wm))
    return float(max(value, 0.0))


def eval_fid(real, generated, spec: FeatureExtractorSpec, net=None) -> float:
    """FID between two datasets of one modality."""
    f_real = extract_features(real, spec, net)
    f_gen = extract_features(generated, spec, net)
    for name, f in (("real", f_real), ("generated", f_gen)):
        if len(f) <= f.shape[1]:
            _logger.warning(
                "%s set has %d samples for %d features; the covariance is singular",
                name,
                len(f),
                f.shape[1],
            )
    return fid(GaussianStats.from_features(f_real), GaussianStats.from_features(f_gen))
