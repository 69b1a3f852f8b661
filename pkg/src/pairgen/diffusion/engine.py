"""Denoiser training on encoded majority data, latent sampling and pair generation."""
from dataclasses import dataclass, field
import json
import logging

import numpy as np
import torch
import torch.nn.functional as F
from tqdm import tqdm

from ..data import load_checkpoint, save_checkpoint
from ..errors import NumericalError
from ..initializer import get_device
from ..models import (
    Denoiser,
    TwoHeadNet,
    load_optimizer,
    load_state,
    optimizer_tensors,
    state_tensors,
)
from ..utils import derive_seed
from .ema import EMA
from .schedule import (
    NoiseSchedule,
    make_schedule,
    q_sample,
    recover_eps,
    recover_z0,
    v_target,
)

_logger = logging.getLogger(__name__)

SAMPLERS = ("deterministic", "ancestral")


@dataclass(frozen=True)
class DiffusionTrainConfig:
    """Denoiser training settings.

    `steps` counts micro-batches; the optimizer and the EMA shadow update once per
    `grad_accum` micro-batches.
    """

    steps: int = 20000
    lr: float = 8e-5
    grad_accum: int = 2
    ema_decay: float = 0.995
    batch_size: int = 64
    seed: int = 0
    T: int = 256
    schedule: str = "cosine"
    hidden: int = 512
    blocks: int = 4
    log_every: int = 100

    def validate(self):
        """Raises ValueError when a count is not positive or the decay is out of range."""
        for name in ("steps", "grad_accum", "batch_size", "T", "hidden", "blocks"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.lr <= 0:
            raise ValueError(f"lr must be positive, got {self.lr}")
        if not 0 < self.ema_decay < 1:
            raise ValueError(f"ema_decay must be in (0, 1), got {self.ema_decay}")


@dataclass
class DenoiserState:
    """Live denoiser, its EMA shadow and the bookkeeping needed to resume."""

    model: Denoiser
    ema: EMA
    schedule: NoiseSchedule
    latent_scale: float = 1.0
    step: int = 0
    optimizer_state: tuple = None
    history: list = field(default_factory=list)

    @property
    def trained(self) -> bool:
        return self.step > 0


def diffusion_loss(
    model: torch.nn.Module,
    z0: torch.Tensor,
    t: torch.Tensor,
    eps: torch.Tensor,
    sched: NoiseSchedule,
) -> torch.Tensor:
    """Mean squared error between the predicted and true v-targets."""
    z_t = q_sample(z0, t, eps, sched)
    return F.mse_loss(model(z_t, t), v_target(z0, eps, t, sched))


def new_state(
    latent_dim: int, cfg: DiffusionTrainConfig, latent_scale: float = 1.0
) -> DenoiserState:
    """An untrained state with seed-determined initial weights."""
    torch.manual_seed(cfg.seed)
    model = Denoiser(latent_dim, cfg.hidden, cfg.blocks).to(get_device())
    return DenoiserState(
        model=model,
        ema=EMA(model, cfg.ema_decay),
        schedule=make_schedule(cfg.T, cfg.schedule),
        latent_scale=latent_scale,
    )


@torch.no_grad()
def encode_corpus(net: TwoHeadNet, corpus, batch_size: int = 256) -> torch.Tensor:
    """Co-latents of a normalized majority corpus, computed in inference mode.

    The network's training mode and parameters are left as they were.
    """
    training = net.training
    net.eval()
    data = torch.as_tensor(np.asarray(corpus), dtype=torch.float32)
    try:
        chunks = [
            net.encode(data[i : i + batch_size].to(get_device())).cpu()
            for i in range(0, len(data), batch_size)
        ]
    finally:
        net.train(training)
    return torch.cat(chunks)


def fit_denoiser(
    latents: torch.Tensor,
    cfg: DiffusionTrainConfig,
    state: DenoiserState = None,
    until: int = None,
    metrics_path: str = None,
    progress: bool = False,
) -> DenoiserState:
    """Train (or resume training) a denoiser on fixed latents.

    Each micro-step draws sample indices, timesteps in 1..T and Gaussian noise from a
    generator seeded by (seed, step), so a resumed run replays the exact stream of
    an uninterrupted one.

    Args:
        latents (torch.Tensor): m x c co-latents.
        cfg (DiffusionTrainConfig): Training settings.
        state (DenoiserState, optional): State to resume. Defaults to None, a fresh
        state scaled by the latent standard deviation.
        until (int, optional): Stop after this many micro-steps instead of
        `cfg.steps`; must fall on an optimizer step. Defaults to None.
        metrics_path (str, optional): JSON-lines log, appended. Defaults to None.
        progress (bool, optional): Show a progress bar. Defaults to False.

    Raises:
        ValueError: When the corpus is empty or `until` splits an accumulation.
        NumericalError: When the loss is not finite, naming the step.

    Returns:
        DenoiserState: The trained state.
    """
    cfg.validate()
    if len(latents) == 0:
        raise ValueError("cannot train a denoiser on an empty corpus")
    until = cfg.steps if until is None else min(int(until), cfg.steps)
    if until % cfg.grad_accum and until != cfg.steps:
        raise ValueError(f"until={until} must be a multiple of grad_accum={cfg.grad_accum}")

    device = get_device()
    latents = latents.detach().float().cpu()
    if state is None:
        scale = float(latents.std()) if latents.numel() > 1 else 1.0
        state = new_state(latents.shape[1], cfg, scale if scale > 1e-8 else 1.0)

    model, sched = state.model, state.schedule
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.lr)
    if state.optimizer_state is not None:
        load_optimizer(optimizer, *state.optimizer_state)

    data = (latents / state.latent_scale).to(device)
    m, c = data.shape
    batch = cfg.batch_size
    metrics = open(metrics_path, "a", encoding="utf-8") if metrics_path else None

    model.train()
    optimizer.zero_grad()
    window = []
    try:
        for step in tqdm(range(state.step, until), disable=not progress, desc="diffusion"):
            g = torch.Generator().manual_seed(derive_seed(cfg.seed, f"diffusion:{step}"))
            idx = torch.randint(m, (batch,), generator=g)
            t = torch.randint(1, sched.T + 1, (batch,), generator=g)
            eps = torch.randn(batch, c, generator=g)

            loss = diffusion_loss(model, data[idx.to(device)], t.to(device), eps.to(device), sched)
            if not torch.isfinite(loss):
                raise NumericalError(f"non-finite denoiser loss at step {step}")
            (loss / cfg.grad_accum).backward()
            window.append(float(loss))

            if (step + 1) % cfg.grad_accum == 0:
                optimizer.step()
                optimizer.zero_grad()
                state.ema.update(model)
                state.history.append(float(np.mean(window)))
                window = []

                update = (step + 1) // cfg.grad_accum
                if update % cfg.log_every == 0:
                    _logger.debug("diffusion step %d loss %.6f", step + 1, state.history[-1])
                    if metrics:
                        metrics.write(
                            json.dumps({"step": step + 1, "loss": state.history[-1]}) + "\n"
                        )
            state.step = step + 1
    finally:
        if metrics:
            metrics.close()

    state.optimizer_state = optimizer_tensors(optimizer)
    return state


def train_diffusion(
    net: TwoHeadNet,
    corpus,
    cfg: DiffusionTrainConfig,
    sched: NoiseSchedule = None,
    state: DenoiserState = None,
    **kwargs,
) -> DenoiserState:
    """Train the latent denoiser on the encoded majority corpus.

    The corpus is encoded once, without gradients and in inference mode. The
    network's `requires_grad` flags and training mode are not modified.

    Args:
        net (TwoHeadNet): Network whose encoder produces the co-latents.
        corpus: m normalized majority arrays.
        cfg (DiffusionTrainConfig): Training settings.
        sched (NoiseSchedule, optional): Replaces the schedule built from `cfg`.
        state (DenoiserState, optional): State to resume.
        **kwargs: Passed to `fit_denoiser`.

    Raises:
        ValueError: When the corpus is empty.
        NumericalError: When the loss is not finite.

    Returns:
        DenoiserState: The trained state.
    """
    if len(corpus) == 0:
        raise ValueError("cannot train a denoiser on an empty corpus")
    latents = encode_corpus(net, corpus)
    _logger.info("encoded %d majority samples to %d-d latents", len(latents), latents.shape[1])

    if state is None and sched is not None:
        state = new_state(latents.shape[1], cfg, max(float(latents.std()), 1e-8))
        state.schedule = sched
    return fit_denoiser(latents, cfg, state=state, **kwargs)


def _timesteps(T: int, steps: int) -> list[int]:
    if not 1 <= steps <= T:
        raise ValueError(f"sampling steps must be in [1, {T}], got {steps}")
    return [int(t) for t in np.round(np.linspace(T, 0, steps + 1))]


@torch.no_grad()
def _reverse(
    model: torch.nn.Module,
    z: torch.Tensor,
    sched: NoiseSchedule,
    steps: int,
    sampler: str,
    generators: list[torch.Generator],
) -> torch.Tensor:
    if sampler not in SAMPLERS:
        raise ValueError(f"unknown sampler {sampler}, expected one of {SAMPLERS}")
    times = _timesteps(sched.T, steps)
    n = z.shape[0]
    for t, s in zip(times[:-1], times[1:]):
        tt = torch.full((n,), t, dtype=torch.long, device=z.device)
        u = model(z, tt)
        z0_hat = recover_z0(z, u, t, sched)
        eps_hat = recover_eps(z, u, t, sched)

        alpha_s, sigma_s = float(sched.alpha[s]), float(sched.sigma[s])
        if sampler == "deterministic" or s == 0:
            z = alpha_s * z0_hat + sigma_s * eps_hat
        else:
            alpha_t, sigma_t = float(sched.alpha[t]), float(sched.sigma[t])
            eta = (sigma_s / sigma_t) * np.sqrt(max(0.0, 1 - alpha_t**2 / alpha_s**2))
            noise = torch.stack(
                [torch.randn(z.shape[1], generator=g) for g in generators]
            ).to(z.device)
            z = (
                alpha_s * z0_hat
                + np.sqrt(max(0.0, sigma_s**2 - eta**2)) * eps_hat
                + eta * noise
            )
    return z


def sample_latent(
    state: DenoiserState,
    sched: NoiseSchedule = None,
    steps: int = None,
    seed: int = 0,
    sampler: str = "deterministic",
    count: int = 1,
) -> torch.Tensor:
    """Denoise Gaussian noise into co-latents with the EMA weights.

    Args:
        state (DenoiserState): A trained state.
        sched (NoiseSchedule, optional): Defaults to the state's schedule.
        steps (int, optional): Reverse steps over an evenly strided subsequence of
        T..0. Defaults to T.
        seed (int, optional): Seed of the starting noise. Defaults to 0.
        sampler (str, optional): "deterministic" or "ancestral". Defaults to
        "deterministic".
        count (int, optional): Number of latents. Defaults to 1.

    Raises:
        ValueError: When the state is untrained or the step count is invalid.

    Returns:
        torch.Tensor: count x c latents in encoder units.
    """
    if not state.trained:
        raise ValueError("denoiser state is untrained; train it before sampling")
    sched = sched or state.schedule
    steps = sched.T if steps is None else int(steps)

    g = torch.Generator().manual_seed(int(seed))
    model = state.ema.shadow
    device = next(model.parameters()).device
    z = torch.randn(count, model.latent_dim, generator=g).to(device)
    z = _reverse(model, z, sched, steps, sampler, [g] * count)
    return (z * state.latent_scale).cpu()


@torch.no_grad()
def generate_pairs(
    state: DenoiserState,
    net: TwoHeadNet,
    count: int,
    seed: int = 0,
    sampler: str = "deterministic",
    steps: int = None,
    start_index: int = 0,
    batch_size: int = 64,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Generate paired (velocity, seismic) samples decoded from shared latents.

    Sample i starts from noise seeded by (seed, start_index + i). Batches are
    aligned to multiples of `batch_size` in index space and always hold
    `batch_size` samples, so a sample's bits depend only on the seed, its index and
    the batch size. Regenerating one index alone reproduces it exactly.

    Args:
        state (DenoiserState): A trained state.
        net (TwoHeadNet): The network with both heads.
        count (int): Number of pairs.
        seed (int, optional): Generation seed. Defaults to 0.
        sampler (str, optional): "deterministic" or "ancestral".
        steps (int, optional): Reverse steps. Defaults to T.
        start_index (int, optional): Index of the first sample. Defaults to 0.
        batch_size (int, optional): Samples denoised together. Defaults to 64.

    Raises:
        ValueError: When the state is untrained.

    Returns:
        list[tuple[np.ndarray, np.ndarray]]: Normalized (velocity, seismic) arrays.
    """
    if not state.trained:
        raise ValueError("denoiser state is untrained; train it before sampling")
    sched = state.schedule
    steps = sched.T if steps is None else int(steps)
    model = state.ema.shadow
    device = next(model.parameters()).device
    net.eval()

    pairs = []
    stop = start_index + count
    for lo in range(start_index - start_index % batch_size, stop, batch_size):
        indices = range(lo, lo + batch_size)
        generators = [
            torch.Generator().manual_seed(derive_seed(seed, f"pair:{i}")) for i in indices
        ]
        z = torch.stack([torch.randn(model.latent_dim, generator=g) for g in generators])
        z = _reverse(model, z.to(device), sched, steps, sampler, generators)
        z = z * state.latent_scale

        vel = net.decode_velocity(z).cpu().numpy()
        seis = net.decode_seismic(z).cpu().numpy()
        keep = slice(max(start_index - lo, 0), min(stop - lo, batch_size))
        pairs.extend(zip(vel[keep], seis[keep]))

    _logger.info("generated %d pairs (seed=%d, sampler=%s)", count, seed, sampler)
    return pairs


def save_denoiser(state: DenoiserState, path: str, extra: dict = None):
    """Write live, EMA and optimizer tensors with the schedule embedded."""
    tensors = state_tensors(state.model, "live.")
    tensors.update(state_tensors(state.ema.shadow, "ema."))
    groups = None
    if state.optimizer_state is not None:
        opt, groups = state.optimizer_state
        tensors.update(opt)
    model = state.model
    metadata = {
        "kind": "denoiser",
        "step": state.step,
        "latent_scale": state.latent_scale,
        "schedule": state.schedule.to_dict(),
        "latent_dim": model.latent_dim,
        "hidden": model.time_dim,
        "blocks": len(model.blocks),
        "ema_decay": state.ema.decay,
        "param_groups": groups,
        "history": state.history,
        **(extra or {}),
    }
    save_checkpoint(path, tensors, metadata)


def load_denoiser(path: str) -> DenoiserState:
    """Read a state written by `save_denoiser`.

    Raises:
        ArtifactMissingError: When the checkpoint does not exist.
        DatasetError: When the checkpoint is corrupted.
    """
    tensors, meta = load_checkpoint(path)
    device = get_device()
    model = Denoiser(meta["latent_dim"], meta["hidden"], meta["blocks"])
    load_state(model, tensors, "live.")
    model.to(device)
    ema = EMA(model, meta["ema_decay"])
    load_state(ema.shadow, tensors, "ema.")
    ema.shadow.to(device)

    opt = {k: v for k, v in tensors.items() if k.startswith("opt.")}
    groups = meta.get("param_groups")
    return DenoiserState(
        model=model,
        ema=ema,
        schedule=NoiseSchedule.from_dict(meta["schedule"]),
        latent_scale=meta["latent_scale"],
        step=meta["step"],
        optimizer_state=(opt, groups) if groups is not None else None,
        history=list(meta.get("history", [])),
    )
