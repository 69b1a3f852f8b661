"""Unit tests for the diffusion package."""
import numpy as np
import pytest
import torch


def _config(**kwargs):
    from pairgen.diffusion import DiffusionTrainConfig

    defaults = dict(steps=8, grad_accum=2, batch_size=8, T=16, hidden=32, blocks=1, log_every=1)
    return DiffusionTrainConfig(**{**defaults, **kwargs})


def _latents(count=12, dim=16, seed=0):
    g = torch.Generator().manual_seed(seed)
    return torch.randn(count, dim, generator=g) * 3.0


@pytest.mark.parametrize("kind", ["cosine", "linear"])
def test_schedule(kind):
    from pairgen.diffusion import make_schedule

    sched = make_schedule(64, kind)
    assert len(sched.alpha) == 65
    assert sched.alpha[0] == pytest.approx(1.0)
    assert sched.sigma[0] == pytest.approx(0.0)
    assert np.all(np.diff(sched.alpha) <= 0)
    assert np.all(sched.alpha >= 1e-4)
    np.testing.assert_allclose(sched.alpha**2 + sched.sigma**2, 1.0, atol=1e-12)


def test_schedule_cosine_values():
    from pairgen.diffusion import NoiseSchedule, make_schedule

    sched = make_schedule(4)
    assert sched.alpha[2] == pytest.approx(np.cos(np.pi / 4))
    assert sched.alpha[4] == pytest.approx(1e-4)
    assert NoiseSchedule.from_dict(sched.to_dict()).alpha == pytest.approx(sched.alpha)


def test_schedule_invalid():
    from pairgen.diffusion import make_schedule

    with pytest.raises(ValueError):
        make_schedule(0)
    with pytest.raises(ValueError):
        make_schedule(16, "sigmoid")
    with pytest.raises(ValueError):
        make_schedule(16).coefficients(17, torch.zeros(3))


def test_v_algebra():
    from pairgen.diffusion import make_schedule, q_sample, recover_eps, recover_z0, v_target

    sched = make_schedule(32)
    g = torch.Generator().manual_seed(0)
    z0 = torch.randn(6, 5, generator=g, dtype=torch.float64)
    eps = torch.randn(6, 5, generator=g, dtype=torch.float64)
    t = torch.tensor([0, 1, 8, 16, 31, 32])

    z_t = q_sample(z0, t, eps, sched)
    u = v_target(z0, eps, t, sched)
    torch.testing.assert_close(recover_z0(z_t, u, t, sched), z0)
    torch.testing.assert_close(recover_eps(z_t, u, t, sched), eps)

    # scalar timestep on a single vector
    torch.testing.assert_close(
        recover_z0(q_sample(z0[0], 5, eps[0], sched), v_target(z0[0], eps[0], 5, sched), 5, sched),
        z0[0],
    )
    with pytest.raises(ValueError):
        q_sample(z0, t, eps[:, :4], sched)


def test_ema():
    from pairgen.diffusion import EMA

    model = torch.nn.Linear(3, 2)
    ema = EMA(model, decay=0.5)
    for a, b in zip(ema.shadow.parameters(), model.parameters()):
        assert torch.equal(a, b)

    old = [p.detach().clone() for p in model.parameters()]
    with torch.no_grad():
        for p in model.parameters():
            p.add_(1.0)
    ema.update(model)
    for shadow, before in zip(ema.shadow.parameters(), old):
        torch.testing.assert_close(shadow, before + 0.5)
    assert not any(p.requires_grad for p in ema.shadow.parameters())

    with pytest.raises(ValueError):
        EMA(model, decay=1.0)
    with pytest.raises(ValueError):
        ema.update(torch.nn.Linear(3, 4))


def test_ema_closed_form():
    """Unit test the shadow after k updates against its closed form."""
    from pairgen.diffusion import EMA

    torch.manual_seed(0)
    model = torch.nn.Linear(4, 3).double()
    decay, k = 0.9, 6
    ema = EMA(model, decay=decay)

    history = [[p.detach().clone() for p in model.parameters()]]
    for _ in range(k):
        with torch.no_grad():
            for p in model.parameters():
                p.copy_(torch.randn_like(p))
        ema.update(model)
        history.append([p.detach().clone() for p in model.parameters()])

    for i, shadow in enumerate(ema.shadow.parameters()):
        expected = decay**k * history[0][i]
        for j in range(1, k + 1):
            expected = expected + (1 - decay) * decay ** (k - j) * history[j][i]
        torch.testing.assert_close(shadow, expected, rtol=0, atol=1e-6)


def test_q_sample_variance():
    """Unit test that noising unit-variance latents keeps unit variance at every t."""
    from pairgen.diffusion import make_schedule, q_sample

    sched = make_schedule(64)
    g = torch.Generator().manual_seed(0)
    for t in (0, 1, 16, 32, 48, 63, 64):
        z0 = torch.randn(100_000, 1, generator=g, dtype=torch.float64)
        eps = torch.randn(100_000, 1, generator=g, dtype=torch.float64)
        assert float(q_sample(z0, t, eps, sched).var()) == pytest.approx(1.0, rel=0.05)


def test_untrained_loss_near_one():
    """Unit test the loss of a fresh denoiser on unit-Gaussian latents and noise."""
    from pairgen.diffusion import diffusion_loss, new_state

    state = new_state(8, _config(T=64))
    g = torch.Generator().manual_seed(0)
    z0 = torch.randn(8192, 8, generator=g)
    eps = torch.randn(8192, 8, generator=g)
    t = torch.randint(1, 65, (8192,), generator=g)
    with torch.no_grad():
        loss = diffusion_loss(state.model, z0, t, eps, state.schedule)
    assert float(loss) == pytest.approx(1.0, rel=0.2)


def test_diffusion_loss_gradients(check_gradients):
    """Unit test the denoiser loss gradient against central differences."""
    from pairgen.diffusion import diffusion_loss, make_schedule
    from pairgen.models import Denoiser

    torch.manual_seed(0)
    model = Denoiser(latent_dim=4, hidden=8, blocks=1).double()
    torch.nn.init.normal_(model.out.weight, std=0.5)
    sched = make_schedule(16)
    g = torch.Generator().manual_seed(1)
    z0 = torch.randn(3, 4, generator=g, dtype=torch.float64)
    eps = torch.randn(3, 4, generator=g, dtype=torch.float64)
    t = torch.tensor([1, 7, 16])

    def loss():
        return diffusion_loss(model, z0, t, eps, sched)

    params = list(model.parameters())
    assert check_gradients(loss, params) >= len(params)


def test_config_validate():
    from pairgen.diffusion import DiffusionTrainConfig

    DiffusionTrainConfig().validate()
    with pytest.raises(ValueError):
        DiffusionTrainConfig(steps=0).validate()
    with pytest.raises(ValueError):
        DiffusionTrainConfig(ema_decay=1.0).validate()
    with pytest.raises(ValueError):
        DiffusionTrainConfig(lr=0.0).validate()


def test_fit_denoiser():
    from pairgen.diffusion import fit_denoiser

    latents = _latents()
    state = fit_denoiser(latents, _config())
    assert state.step == 8
    assert len(state.history) == 4
    assert state.latent_scale == pytest.approx(float(latents.std()))
    assert state.trained

    with pytest.raises(ValueError):
        fit_denoiser(latents[:0], _config())
    with pytest.raises(ValueError):
        fit_denoiser(latents, _config(), until=3)


def test_resume_matches_uninterrupted(tmp_path):
    from pairgen.diffusion import fit_denoiser, load_denoiser, save_denoiser

    latents, cfg = _latents(), _config()
    full = fit_denoiser(latents, cfg)

    half = fit_denoiser(latents, cfg, until=4)
    assert half.step == 4
    save_denoiser(half, str(tmp_path / "half"))
    resumed = fit_denoiser(latents, cfg, state=load_denoiser(str(tmp_path / "half")))

    assert resumed.step == full.step
    assert resumed.history == pytest.approx(full.history, rel=1e-6)
    for a, b in zip(full.ema.shadow.parameters(), resumed.ema.shadow.parameters()):
        torch.testing.assert_close(a, b, rtol=1e-6, atol=1e-7)


def test_save_load(tmp_path):
    from pairgen.diffusion import fit_denoiser, load_denoiser, sample_latent, save_denoiser

    state = fit_denoiser(_latents(), _config())
    path = str(tmp_path / "diffusion")
    save_denoiser(state, path, {"encdec": "checkpoints/step2/v001"})
    loaded = load_denoiser(path)

    assert loaded.step == state.step
    assert loaded.latent_scale == state.latent_scale
    assert loaded.schedule.T == 16
    assert loaded.history == pytest.approx(state.history)
    torch.testing.assert_close(
        sample_latent(loaded, seed=3, count=2), sample_latent(state, seed=3, count=2)
    )


def test_sample_untrained_raises():
    from pairgen.diffusion import new_state, sample_latent

    state = new_state(16, _config())
    with pytest.raises(ValueError):
        sample_latent(state)


def test_sample_zero_model():
    """Unit test the reverse pass of a model predicting u = 0."""
    from pairgen.diffusion import new_state, sample_latent

    state = new_state(16, _config(T=4))
    state.step = 1
    sched = state.schedule

    factor = 1.0
    for t, s in ((4, 3), (3, 2), (2, 1), (1, 0)):
        factor *= sched.alpha[s] * sched.alpha[t] + sched.sigma[s] * sched.sigma[t]

    z = sample_latent(state, seed=11, count=1)
    noise = torch.randn(1, 16, generator=torch.Generator().manual_seed(11))
    torch.testing.assert_close(z, noise * factor, rtol=1e-5, atol=1e-6)


@pytest.mark.parametrize("sampler", ["deterministic", "ancestral"])
def test_sample_deterministic(sampler):
    from pairgen.diffusion import fit_denoiser, sample_latent

    state = fit_denoiser(_latents(), _config())
    a = sample_latent(state, seed=5, sampler=sampler, count=3)
    b = sample_latent(state, seed=5, sampler=sampler, count=3)
    c = sample_latent(state, seed=6, sampler=sampler, count=3)
    assert a.shape == (3, 16)
    assert torch.equal(a, b)
    assert not torch.equal(a, c)
    assert sample_latent(state, steps=4, seed=5).shape == (1, 16)

    with pytest.raises(ValueError):
        sample_latent(state, steps=0)
    with pytest.raises(ValueError):
        sample_latent(state, steps=17)
    with pytest.raises(ValueError):
        sample_latent(state, sampler="heun")


def test_train_diffusion(small_encdec):
    from pairgen.diffusion import train_diffusion
    from pairgen.training import build_network

    net = build_network(small_encdec, 0)
    before = [p.detach().clone() for p in net.parameters()]
    corpus = np.random.default_rng(0).uniform(-1, 1, (10, 16, 16)).astype(np.float32)
    state = train_diffusion(net, corpus, _config())
    assert state.step == 8
    assert state.model.latent_dim == 16

    # the network is only read
    assert all(p.requires_grad for p in net.parameters())
    assert net.training
    assert all(torch.equal(a, b) for a, b in zip(before, net.parameters()))
    with pytest.raises(ValueError):
        train_diffusion(net, corpus[:0], _config())


@pytest.mark.parametrize("sampler", ["deterministic", "ancestral"])
def test_generate_pairs(small_encdec, sampler):
    from pairgen.diffusion import fit_denoiser, generate_pairs
    from pairgen.training import build_network

    net = build_network(small_encdec, 0)
    state = fit_denoiser(_latents(), _config())

    def generate(count, **kwargs):
        return generate_pairs(state, net, count, seed=2, sampler=sampler, steps=8, **kwargs)

    pairs = generate(5, batch_size=2)
    assert len(pairs) == 5
    vel, seis = pairs[0]
    assert vel.shape == (16, 16) and seis.shape == (3, 64, 16)
    assert np.abs(vel).max() <= 1.0 and np.abs(seis).max() <= 1.0
    assert not np.array_equal(pairs[0][0], pairs[1][0])

    # bit-identical under a fixed batch size, whatever the count and start
    repeated = generate(5, batch_size=2)
    (alone,) = generate(1, start_index=3, batch_size=2)
    tail = generate(3, start_index=2, batch_size=2)
    for (v1, s1), (v2, s2) in zip(pairs, repeated):
        assert np.array_equal(v1, v2) and np.array_equal(s1, s2)
    assert np.array_equal(alone[0], pairs[3][0]) and np.array_equal(alone[1], pairs[3][1])
    for (v1, s1), (v2, s2) in zip(pairs[2:], tail):
        assert np.array_equal(v1, v2) and np.array_equal(s1, s2)

    wide = generate(5, batch_size=5)
    for (v1, s1), (v2, s2) in zip(pairs, wide):
        np.testing.assert_allclose(v1, v2, rtol=1e-5, atol=1e-5)
        np.testing.assert_allclose(s1, s2, rtol=1e-5, atol=1e-5)
    assert generate(0) == []


@pytest.mark.slow
def test_denoiser_memorizes_one_latent():
    """Unit test the loss floor and the samples of a denoiser trained on one latent."""
    from pairgen.diffusion import diffusion_loss, fit_denoiser, sample_latent

    point = torch.randn(1, 8, generator=torch.Generator().manual_seed(3))
    cfg = _config(steps=4000, grad_accum=1, batch_size=256, lr=1e-3, T=4, hidden=128, blocks=2)
    state = fit_denoiser(point, cfg)

    g = torch.Generator().manual_seed(9)
    z0 = (point / state.latent_scale).expand(4096, -1)
    t = torch.randint(1, 5, (4096,), generator=g)
    eps = torch.randn(4096, 8, generator=g)
    with torch.no_grad():
        loss = diffusion_loss(state.ema.shadow, z0, t, eps, state.schedule)
    assert float(loss) < 1e-3

    samples = sample_latent(state, seed=1, count=32)
    assert float((samples - point).norm(dim=1).max()) < 0.1 * np.sqrt(8)


@pytest.mark.slow
def test_denoiser_memorizes():
    """Unit test samples collapsing onto a tiny training set."""
    from pairgen.diffusion import fit_denoiser, sample_latent

    g = torch.Generator().manual_seed(0)
    points = torch.randn(4, 8, generator=g) * 2.0
    cfg = _config(steps=4000, grad_accum=1, batch_size=64, lr=2e-3, hidden=64, blocks=2)
    state = fit_denoiser(points, cfg)

    samples = sample_latent(state, seed=1, count=64)
    nearest = torch.cdist(samples, points).min(dim=1).values
    spread = torch.pdist(points).min()
    assert float(nearest.median()) < 0.5 * float(spread)
