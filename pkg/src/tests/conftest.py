"""Pytest global fixtures."""
import numpy as np
import pytest
import torch

from pairgen.initializer import init_torch


@pytest.fixture(autouse=True, scope="session")
def runtime():
    """Fixture for a seeded, deterministic torch runtime."""
    init_torch(seed=0, deterministic=True)


@pytest.fixture
def run_dir(tmp_path):
    """An empty run output directory."""
    return str(tmp_path / "run")


@pytest.fixture
def small_encdec():
    """A network shape small enough to train in a unit test."""
    from pairgen.models import EncDecConfig

    return EncDecConfig(
        latent_dim=16,
        velocity_shape=(16, 16),
        seismic_shape=(3, 64, 16),
        time_tokens=4,
        receiver_tokens=16,
        token_dim=32,
        heads=4,
        ff_dim=64,
        layers=1,
    )


def _check_gradients(loss_fn, params, picks=2, h=1e-6) -> int:
    grads = torch.autograd.grad(loss_fn(), params, allow_unused=True)
    checked = 0
    for p, g in zip(params, grads):
        flat = p.data.view(-1)
        for k in np.unique(np.linspace(0, flat.numel() - 1, picks).astype(int)):
            old = float(flat[k])
            flat[k] = old + h
            up = float(loss_fn())
            flat[k] = old - h
            down = float(loss_fn())
            flat[k] = old
            fd = (up - down) / (2 * h)
            analytic = 0.0 if g is None else float(g.view(-1)[k])
            assert abs(analytic - fd) <= 1e-4 * max(abs(fd), abs(analytic)) + 1e-8, (
                f"entry {k} of a {tuple(p.shape)} tensor: autograd {analytic}, "
                f"central difference {fd}"
            )
            checked += 1
    return checked


@pytest.fixture
def check_gradients():
    """Compare autograd against central differences on a few entries per float64 tensor.

    Returns the number of entries checked.
    """
    return _check_gradients


@pytest.fixture
def small_run(run_dir):
    """A complete configuration document for a 16 x 16 end-to-end run."""
    return {
        "seed": 0,
        "output_dir": run_dir,
        "data": {"count": 12, "n_paired": 6},
        "synth": {"family": "flatvel", "params": {"size": 16}},
        "forward": {"f0": 40.0, "nt": 128, "source_columns": [2, 8, 13], "sponge_width": 6},
        "encdec": {
            "latent_dim": 16,
            "velocity_shape": [16, 16],
            "seismic_shape": [3, 128, 16],
            "time_tokens": 4,
            "receiver_tokens": 16,
            "token_dim": 32,
            "heads": 4,
            "ff_dim": 64,
            "layers": 1,
        },
        "trainer": {"epochs_step1": 2, "epochs_step2": 2, "batch_size": 4},
        "diffusion": {"steps": 4, "grad_accum": 2, "batch_size": 8, "T": 8, "hidden": 32, "blocks": 1},
        "generate": {"count": 6, "batch_size": 4},
        "evaluation": {
            "feature_dim": 8,
            "inversion": {"epochs": 1, "width": 4, "batch_size": 4},
            "physics_samples": 2,
        },
    }
