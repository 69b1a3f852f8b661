"""Pairwise consistency: train a seismic-to-velocity network and score it on real pairs."""
from dataclasses import asdict, dataclass, field
import logging
import time

import numpy as np
import torch
from tqdm import tqdm

from ..data import Modality, PairedSample, to_modality
from ..errors import DatasetError, NumericalError
from ..initializer import get_device
from ..models import InversionLite
from ..utils import derive_seed
from .ssim import ssim_maps

_logger = logging.getLogger(__name__)

SSIM_RANGE = 2.0


@dataclass(frozen=True)
class InversionConfig:
    """Inversion-lite training settings."""

    epochs: int = 100
    batch_size: int = 32
    learning_rate: float = 1e-3
    seed: int = 0
    width: int = 16

    def validate(self):
        if self.epochs < 1 or self.batch_size < 1 or self.width < 1:
            raise ValueError(f"epochs, batch_size and width must be >= 1: {self}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")


@dataclass
class PairwiseReport:
    """Scores of a velocity predictor on real test pairs, in normalized units."""

    mae: float
    mse: float
    ssim: float
    n: int
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def split_modalities(
    samples: list[PairedSample], majority_modality: str | Modality
) -> tuple[np.ndarray, np.ndarray]:
    """(seismic, velocity) stacks of paired samples.

    Raises:
        DatasetError: When a sample is not paired.
    """
    majority = to_modality(majority_modality)
    if not samples:
        raise ValueError("no samples to evaluate")
    for s in samples:
        if not s.paired:
            raise DatasetError(f"sample {s.id} is not paired")
    ma = np.stack([s.ma for s in samples]).astype(np.float32)
    mi = np.stack([s.mi for s in samples]).astype(np.float32)
    return (mi, ma) if majority == Modality.VELOCITY else (ma, mi)


def train_inversion_lite(
    seis: np.ndarray,
    vel: np.ndarray,
    cfg: InversionConfig = InversionConfig(),
    progress: bool = False,
) -> tuple[InversionLite, dict]:
    """Train a small seismic-to-velocity network with an L1 + L2 loss.

    Args:
        seis (np.ndarray): N x S x Tt x R normalized gathers.
        vel (np.ndarray): N x H x W normalized maps.
        cfg (InversionConfig, optional): Training settings.
        progress (bool, optional): Show a progress bar. Defaults to False.

    Raises:
        ValueError: When the inputs are empty or their counts differ.
        NumericalError: When the loss is not finite, naming the epoch.

    Returns:
        tuple[InversionLite, dict]: The trained model in eval mode and its training
        metadata (config, final loss, wall clock).
    """
    cfg.validate()
    if len(seis) == 0 or len(seis) != len(vel):
        raise ValueError(f"need matching non-empty inputs, got {len(seis)} and {len(vel)}")

    device = get_device()
    torch.manual_seed(derive_seed(cfg.seed, "inversion"))
    model = InversionLite(seis.shape[1:], vel.shape[1:], cfg.width).to(device)
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)
    g = torch.Generator().manual_seed(derive_seed(cfg.seed, "inversion:batches"))

    x = torch.as_tensor(seis, dtype=torch.float32, device=device)
    y = torch.as_tensor(vel, dtype=torch.float32, device=device)
    n = len(x)

    start = time.perf_counter()
    loss_value = float("nan")
    model.train()
    for epoch in tqdm(range(cfg.epochs), disable=not progress, desc="inversion"):
        order = torch.randperm(n, generator=g).to(device)
        total = 0.0
        for lo in range(0, n, cfg.batch_size):
            idx = order[lo : lo + cfg.batch_size]
            pred = model(x[idx])
            loss = torch.nn.functional.l1_loss(pred, y[idx]) + torch.nn.functional.mse_loss(
                pred, y[idx]
            )
            if not torch.isfinite(loss):
                raise NumericalError(f"non-finite inversion loss at epoch {epoch}")
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            total += float(loss) * len(idx)
        loss_value = total / n
        _logger.debug("inversion epoch %d loss %.6f", epoch, loss_value)

    model.eval()
    metadata = {
        "config": asdict(cfg),
        "train_size": n,
        "final_loss": loss_value,
        "wall_clock": time.perf_counter() - start,
    }
    return model, metadata


def as_predictor(model: torch.nn.Module, batch_size: int = 256):
    """Wrap a torch module as an array-in, array-out predictor."""
    device = next(model.parameters()).device

    @torch.no_grad()
    def predict(seis: np.ndarray) -> np.ndarray:
        model.eval()
        out = [
            model(torch.as_tensor(seis[lo : lo + batch_size], device=device)).cpu().numpy()
            for lo in range(0, len(seis), batch_size)
        ]
        return np.concatenate(out)

    return predict


def pairwise_eval(
    model, real_test: list[PairedSample], majority_modality: str | Modality = "velocity",
    metadata: dict = None,
) -> PairwiseReport:
    """Score a velocity predictor on real pairs.

    Args:
        model: An `InversionLite` or any callable mapping an N x S x Tt x R array to
        N x H x W velocity predictions.
        real_test (list[PairedSample]): Normalized real pairs.
        majority_modality (str | Modality, optional): Which side of the samples holds
        velocity maps. Defaults to "velocity".
        metadata (dict, optional): Stored with the report.

    Raises:
        DatasetError: When a test sample is not paired.

    Returns:
        PairwiseReport: MAE and MSE over all cells, SSIM averaged per map with a data
        range of 2.
    """
    seis, vel = split_modalities(real_test, majority_modality)
    predict = as_predictor(model) if isinstance(model, torch.nn.Module) else model
    pred = np.asarray(predict(seis), dtype=np.float64)
    if pred.shape != vel.shape:
        raise ValueError(f"predictions have shape {pred.shape}, expected {vel.shape}")

    diff = pred - vel
    score = float(ssim_maps(pred, vel, SSIM_RANGE).mean())
    report = PairwiseReport(
        mae=float(np.abs(diff).mean()),
        mse=float((diff**2).mean()),
        ssim=score,
        n=len(vel),
        metadata=dict(metadata or {}),
    )
    _logger.info(
        "pairwise: MAE %.4f MSE %.4f SSIM %.4f on %d pairs",
        report.mae,
        report.mse,
        report.ssim,
        report.n,
    )
    return report


def mean_predictor(vel_train: np.ndarray):
    """Baseline predicting the training-set mean map for every input."""
    mean = np.asarray(vel_train, dtype=np.float64).mean(axis=0)

    def predict(seis: np.ndarray) -> np.ndarray:
        return np.broadcast_to(mean, (len(seis),) + mean.shape).copy()

    return predict
