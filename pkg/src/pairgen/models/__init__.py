from .denoiser import Denoiser, timestep_embedding
from .encdec import (
    COMPONENTS,
    EncDecConfig,
    LossWeights,
    TwoHeadNet,
    loss_majority,
    loss_minority,
)
from .inversion import InversionLite
from .io import load_optimizer, load_state, optimizer_tensors, state_tensors
