"""Two-step encoder-decoder training: majority self-supervision, then minority
fine-tuning with an optional freeze, plus the one-step ablation."""
from dataclasses import asdict, dataclass, field, replace
import copy
import json
import logging
import time

import numpy as np
import torch
from tqdm import tqdm

from ..data import PairedSample, load_checkpoint, save_checkpoint, to_modality
from ..errors import DatasetError, NumericalError
from ..initializer import get_device
from ..models import (
    COMPONENTS,
    EncDecConfig,
    LossWeights,
    TwoHeadNet,
    load_state,
    loss_majority,
    loss_minority,
    state_tensors,
)
from ..utils import derive_seed

_logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    """Encoder-decoder training settings."""

    epochs_step1: int = 50
    epochs_step2: int = 50
    batch_size: int = 64
    learning_rate: float = 1e-4
    lr_decay: float = 0.995
    freeze: int = 1
    seed: int = 0
    majority_modality: str = "velocity"
    val_fraction: float = 0.1
    gamma1: float = 1.0
    gamma2: float = 1.0
    gamma3: float = 1.0
    gamma4: float = 1.0

    def validate(self):
        """Raises ValueError when a setting is out of range."""
        if self.epochs_step1 < 1 or self.epochs_step2 < 1:
            raise ValueError("epoch counts must be >= 1")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0 < self.lr_decay <= 1:
            raise ValueError(f"lr_decay must be in (0, 1], got {self.lr_decay}")
        if not 0 <= self.val_fraction < 1:
            raise ValueError(f"val_fraction must be in [0, 1), got {self.val_fraction}")
        to_modality(self.majority_modality)
        self.weights()

    def weights(self, freeze: int = None) -> LossWeights:
        return LossWeights(
            self.gamma1,
            self.gamma2,
            self.gamma3,
            self.gamma4,
            self.freeze if freeze is None else freeze,
        )


@dataclass
class TrainReport:
    """Outcome of one training run.

    Attributes:
        step (str): "step1", "step2" or "ablation".
        losses (dict[str, list[float]]): Per-epoch mean loss, keyed by "total" and by
        modality.
        freeze (int): Freeze flag of a step-2 run, None otherwise.
        val_mae (float): Minority reconstruction MAE on the held-out pairs.
        wall_clock (float): Seconds spent training.
        checkpoint (str): Where the resulting weights were saved.
    """

    step: str
    losses: dict = field(default_factory=dict)
    freeze: int = None
    val_mae: float = None
    wall_clock: float = 0.0
    checkpoint: str = None

    @property
    def epochs(self) -> int:
        return len(self.losses.get("total", []))

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(data: dict) -> "TrainReport":
        return TrainReport(**data)


def build_network(cfg: EncDecConfig, seed: int = 0) -> TwoHeadNet:
    """A freshly initialized network whose weights depend only on `seed`."""
    torch.manual_seed(seed)
    return TwoHeadNet(cfg).to(get_device())


def _tensor(x) -> torch.Tensor:
    return torch.as_tensor(np.asarray(x), dtype=torch.float32, device=get_device())


def _pair_arrays(pairs: list[PairedSample]) -> tuple[np.ndarray, np.ndarray]:
    if not pairs:
        raise ValueError("at least one paired sample is required")
    for sample in pairs:
        if sample.mi is None:
            raise DatasetError(f"sample {sample.id} is not paired")
    return np.stack([s.ma for s in pairs]), np.stack([s.mi for s in pairs])


def holdout_split(n: int, fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic (train, validation) index split; validation is floor(fraction * n)."""
    order = np.random.default_rng(derive_seed(seed, "validation")).permutation(n)
    n_val = int(np.floor(fraction * n))
    return np.sort(order[n_val:]), np.sort(order[:n_val])


def step_loss(
    net: TwoHeadNet,
    kind: str,
    ma: torch.Tensor,
    mi: torch.Tensor,
    w: LossWeights,
) -> tuple[torch.Tensor, dict[str, torch.Tensor]]:
    """Loss of one batch for a training step kind.

    Args:
        net (TwoHeadNet): The network.
        kind (str): "step1" uses the majority loss; "step2" and "ablation" use the
        minority loss with `w.freeze`.
        ma (torch.Tensor): Majority batch.
        mi (torch.Tensor): Minority batch, ignored for "step1".
        w (LossWeights): Loss weights.

    Returns:
        tuple[torch.Tensor, dict[str, torch.Tensor]]: The total loss and the
        reconstruction loss of each modality involved.
    """
    major, minor = net.majority.value, net.minority.value
    z = net.encode(ma)
    if kind == "step1":
        loss = loss_majority(net.decode(z, net.majority), ma, w)
        return loss, {major: loss}

    pred_mi = net.decode(z, net.minority)
    parts = {minor: loss_minority(None, None, pred_mi, mi, replace(w, freeze=1))}
    pred_ma = None
    if w.freeze == 0:
        pred_ma = net.decode(z, net.majority)
        parts[major] = loss_majority(pred_ma, ma, w)
    return loss_minority(pred_ma, ma, pred_mi, mi, w), parts


def _fit(
    net: TwoHeadNet,
    kind: str,
    params: list,
    ma: np.ndarray,
    mi: np.ndarray | None,
    epochs: int,
    w: LossWeights,
    cfg: TrainConfig,
    metrics_path: str = None,
    progress: bool = False,
) -> dict[str, list[float]]:
    optimizer = torch.optim.Adam(params, lr=cfg.learning_rate)
    scheduler = torch.optim.lr_scheduler.ExponentialLR(optimizer, gamma=cfg.lr_decay)
    g = torch.Generator().manual_seed(derive_seed(cfg.seed, kind))

    n = len(ma)
    ma_t = _tensor(ma)
    mi_t = _tensor(mi) if mi is not None else None
    losses = {"total": []}
    metrics = open(metrics_path, "a", encoding="utf-8") if metrics_path else None

    net.train()
    try:
        for epoch in tqdm(range(epochs), disable=not progress, desc=kind):
            order = torch.randperm(n, generator=g).to(ma_t.device)
            sums = {}
            for lo in range(0, n, cfg.batch_size):
                idx = order[lo : lo + cfg.batch_size]
                loss, parts = step_loss(
                    net, kind, ma_t[idx], mi_t[idx] if mi_t is not None else None, w
                )
                if not torch.isfinite(loss):
                    raise NumericalError(f"non-finite {kind} loss at epoch {epoch}")
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()

                size = len(idx)
                for name, value in {"total": loss, **parts}.items():
                    sums[name] = sums.get(name, 0.0) + float(value) * size

            record = {name: total / n for name, total in sums.items()}
            for name, value in record.items():
                losses.setdefault(name, []).append(value)

            lr = scheduler.get_last_lr()[0]
            scheduler.step()
            _logger.debug("%s epoch %d lr %.3g loss %.6f", kind, epoch, lr, record["total"])
            if metrics:
                metrics.write(json.dumps({"step": kind, "epoch": epoch, "lr": lr, **record}) + "\n")
    finally:
        if metrics:
            metrics.close()
    return losses


@torch.no_grad()
def reconstruction_mae(
    net: TwoHeadNet, ma: np.ndarray, target: np.ndarray, modality, batch_size: int = 256
) -> float:
    """Mean absolute error of decoding `modality` from encoded majority arrays."""
    net.eval()
    total, count = 0.0, 0
    for lo in range(0, len(ma), batch_size):
        pred = net.decode(net.encode(_tensor(ma[lo : lo + batch_size])), modality)
        diff = (pred - _tensor(target[lo : lo + batch_size])).abs()
        total += float(diff.sum())
        count += diff.numel()
    return total / count


def train_step1(
    net: TwoHeadNet,
    majority: np.ndarray,
    cfg: TrainConfig,
    metrics_path: str = None,
    progress: bool = False,
) -> TrainReport:
    """Self-supervised reconstruction of the majority corpus.

    Only the encoder and the majority projection and decoder are optimized. The
    network is updated in place and holds the resulting weights.

    Args:
        net (TwoHeadNet): The network.
        majority (np.ndarray): m normalized majority arrays.
        cfg (TrainConfig): Training settings.
        metrics_path (str, optional): JSON-lines metrics log. Defaults to None.
        progress (bool, optional): Show a progress bar. Defaults to False.

    Raises:
        ValueError: When the corpus is empty.
        NumericalError: When the loss is not finite, naming the epoch.

    Returns:
        TrainReport: Per-epoch losses.
    """
    cfg.validate()
    majority = np.asarray(majority)
    if len(majority) == 0:
        raise ValueError("step 1 needs a non-empty majority corpus")

    start = time.perf_counter()
    params = net.parameters_of(net.majority_components)
    losses = _fit(
        net, "step1", params, majority, None, cfg.epochs_step1, cfg.weights(), cfg,
        metrics_path, progress,
    )
    report = TrainReport("step1", losses, wall_clock=time.perf_counter() - start)
    _logger.info("step 1 finished, final loss %.6f", losses["total"][-1])
    return report


def train_step2(
    net: TwoHeadNet,
    pairs: list[PairedSample],
    cfg: TrainConfig,
    freeze: int = None,
    metrics_path: str = None,
    progress: bool = False,
) -> TrainReport:
    """Fine-tune on the paired samples.

    With freeze 1 the encoder and the majority head are frozen and only the
    minority projection and decoder train; with freeze 0 every parameter trains
    and the loss includes the majority term. A validation share of the pairs is
    held out and scored after training.

    Args:
        net (TwoHeadNet): Network holding the step-1 weights.
        pairs (list[PairedSample]): n normalized paired samples.
        cfg (TrainConfig): Training settings.
        freeze (int, optional): Overrides `cfg.freeze`. Defaults to None.
        metrics_path (str, optional): JSON-lines metrics log. Defaults to None.
        progress (bool, optional): Show a progress bar. Defaults to False.

    Raises:
        ValueError: When there are no pairs.
        DatasetError: When a sample has no minority array.
        NumericalError: When the loss is not finite.

    Returns:
        TrainReport: Per-epoch losses and the validation MAE.
    """
    cfg.validate()
    w = cfg.weights(freeze)
    ma, mi = _pair_arrays(pairs)
    train_idx, val_idx = holdout_split(len(ma), cfg.val_fraction, cfg.seed)

    start = time.perf_counter()
    if w.freeze == 1:
        frozen = net.parameters_of(net.majority_components)
        for p in frozen:
            p.requires_grad_(False)
        params = net.parameters_of(net.minority_components)
    else:
        frozen, params = [], list(net.parameters())

    try:
        losses = _fit(
            net, "step2", params, ma[train_idx], mi[train_idx], cfg.epochs_step2, w, cfg,
            metrics_path, progress,
        )
    finally:
        for p in frozen:
            p.requires_grad_(True)

    report = TrainReport(
        "step2",
        losses,
        freeze=w.freeze,
        val_mae=_validation_mae(net, ma, mi, train_idx, val_idx),
        wall_clock=time.perf_counter() - start,
    )
    _logger.info("step 2 (freeze=%d) finished, val MAE %.6f", w.freeze, report.val_mae)
    return report


def _validation_mae(net, ma, mi, train_idx, val_idx) -> float:
    if len(val_idx) == 0:
        _logger.warning("no held-out pairs, scoring the training pairs instead")
        val_idx = train_idx
    return reconstruction_mae(net, ma[val_idx], mi[val_idx], net.minority)


def train_onestep_ablation(
    net: TwoHeadNet,
    pairs: list[PairedSample],
    cfg: TrainConfig,
    metrics_path: str = None,
    progress: bool = False,
) -> TrainReport:
    """Train a network jointly on the pairs alone, without the majority corpus.

    Both reconstruction terms are optimized for `epochs_step1 + epochs_step2`
    epochs, on the same training share as `train_step2`.

    Raises:
        ValueError: When there are no pairs.
        DatasetError: When a sample has no minority array.
        NumericalError: When the loss is not finite.

    Returns:
        TrainReport: Per-epoch losses and the validation MAE.
    """
    cfg.validate()
    ma, mi = _pair_arrays(pairs)
    train_idx, val_idx = holdout_split(len(ma), cfg.val_fraction, cfg.seed)

    start = time.perf_counter()
    losses = _fit(
        net, "ablation", list(net.parameters()), ma[train_idx], mi[train_idx],
        cfg.epochs_step1 + cfg.epochs_step2, cfg.weights(0), cfg, metrics_path, progress,
    )
    return TrainReport(
        "ablation",
        losses,
        freeze=0,
        val_mae=_validation_mae(net, ma, mi, train_idx, val_idx),
        wall_clock=time.perf_counter() - start,
    )


def select_freeze(reports) -> int:
    """Pick the freeze flag whose step-2 run scored the lower validation MAE.

    Args:
        reports: Two step-2 TrainReports, one per freeze flag.

    Raises:
        ValueError: When a flag is missing or a report has no validation MAE.

    Returns:
        int: 0 or 1; ties go to 1.
    """
    by_flag = {r.freeze: r for r in reports}
    if set(by_flag) != {0, 1}:
        raise ValueError(f"need one report per freeze flag, got {sorted(by_flag)}")
    for flag, report in by_flag.items():
        if report.val_mae is None:
            raise ValueError(f"report for freeze={flag} has no validation metric")
    return 1 if by_flag[1].val_mae <= by_flag[0].val_mae else 0


def run_freeze_selection(
    net: TwoHeadNet, pairs: list[PairedSample], cfg: TrainConfig, **kwargs
) -> tuple[int, dict[int, tuple[TwoHeadNet, TrainReport]]]:
    """Fine-tune copies of the same step-1 network with both flags and select one.

    Returns:
        tuple[int, dict]: The selected flag and, per flag, the trained network and
        its report.
    """
    runs = {}
    for flag in (0, 1):
        candidate = copy.deepcopy(net)
        runs[flag] = (candidate, train_step2(candidate, pairs, cfg, freeze=flag, **kwargs))
    best = select_freeze([runs[0][1], runs[1][1]])
    _logger.info(
        "freeze selection: F=0 val MAE %.6f, F=1 val MAE %.6f -> F=%d",
        runs[0][1].val_mae,
        runs[1][1].val_mae,
        best,
    )
    return best, runs


def save_network(net: TwoHeadNet, path: str, report: TrainReport = None, **extra):
    """Write network weights, shape config, component partition and report."""
    components = {
        name: [k for k in net.state_dict() if k.startswith(f"{name}.")]
        for name in COMPONENTS
    }
    if report is not None:
        report.checkpoint = path
    metadata = {
        "kind": "encdec",
        "config": asdict(net.cfg),
        "components": components,
        "report": report.to_dict() if report else None,
        **extra,
    }
    save_checkpoint(path, state_tensors(net), metadata)


def load_network(path: str) -> tuple[TwoHeadNet, dict]:
    """Read a network written by `save_network`.

    Raises:
        ArtifactMissingError: When the checkpoint does not exist.
        DatasetError: When it is corrupted or not an encoder-decoder checkpoint.
    """
    tensors, meta = load_checkpoint(path)
    if meta.get("kind") != "encdec":
        raise DatasetError(f"{path} is not an encoder-decoder checkpoint")
    cfg = meta["config"]
    cfg = EncDecConfig(
        **{k: tuple(v) if isinstance(v, list) else v for k, v in cfg.items()}
    )
    net = TwoHeadNet(cfg)
    load_state(net, tensors)
    return net.to(get_device()), meta
