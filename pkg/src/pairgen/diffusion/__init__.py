from .ema import EMA
from .engine import (
    DenoiserState,
    DiffusionTrainConfig,
    diffusion_loss,
    encode_corpus,
    fit_denoiser,
    generate_pairs,
    load_denoiser,
    new_state,
    sample_latent,
    save_denoiser,
    train_diffusion,
)
from .schedule import (
    NoiseSchedule,
    make_schedule,
    q_sample,
    recover_eps,
    recover_z0,
    v_target,
)
