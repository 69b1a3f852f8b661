"""Unit tests for config.py."""
import json

import pytest


def test_defaults():
    from pairgen.config import RunConfig

    cfg = RunConfig.from_dict({})
    assert cfg.seed == 0
    assert cfg.data.count == 2000 and cfg.data.n_paired == 100
    assert cfg.trainer.learning_rate == pytest.approx(1e-4)
    assert cfg.trainer.lr_decay == pytest.approx(0.9)
    assert cfg.forward.source_columns == (4, 16, 27)
    assert cfg.encdec.seismic_shape == (3, 256, 32)


def test_family_learning_rates():
    from pairgen.config import RunConfig

    curved = RunConfig.from_dict({"synth": {"family": "curvevel"}})
    assert curved.trainer.learning_rate == pytest.approx(5e-4)
    assert curved.trainer.lr_decay == pytest.approx(0.995)

    explicit = RunConfig.from_dict(
        {"synth": {"family": "curvevel"}, "trainer": {"learning_rate": 1e-3}}
    )
    assert explicit.trainer.learning_rate == pytest.approx(1e-3)
    assert explicit.trainer.lr_decay == pytest.approx(0.995)


def test_majority_propagation():
    from pairgen.config import RunConfig

    cfg = RunConfig.from_dict({"data": {"majority_modality": "seismic"}})
    assert cfg.encdec.majority_modality == "seismic"
    assert cfg.trainer.majority_modality == "seismic"

    with pytest.raises(ValueError):
        RunConfig.from_dict(
            {"data": {"majority_modality": "velocity"}, "encdec": {"majority_modality": "seismic"}}
        )


def test_invalid_documents():
    from pairgen.config import RunConfig

    for doc in (
        [],
        {"yellowbeard": {}},
        {"data": {"yellowbeard": 1}},
        {"data": []},
        {"seed": -1},
        {"data": {"count": 10, "n_paired": 11}},
        {"synth": {"family": "wavy"}},
        {"synth": {"params": {"depth": 3}}},
        {"synth": {"params": {"size": 16}}},
        {"forward": {"source_columns": [4, 16, 40]}},
        {"forward": {"f0": "15 m"}},
        {"generate": {"sampler": "heun"}},
        {"evaluation": {"axes": ["fid", "beauty"]}},
        {"evaluation": {"inversion": {"epochs": 0}}},
        {"diffusion": {"ema_decay": 1.0}},
    ):
        with pytest.raises(ValueError):
            RunConfig.from_dict(doc)


def test_small_shapes():
    from pairgen.config import RunConfig

    cfg = RunConfig.from_dict(
        {
            "synth": {"params": {"size": 16, "n_layers_range": [2, 3]}},
            "forward": {"nt": 128, "f0": "40 Hz", "source_columns": [2, 8, 13], "sponge_width": 6},
            "encdec": {"velocity_shape": [16, 16], "seismic_shape": [3, 128, 16]},
        }
    )
    assert cfg.forward.source_columns == (2, 8, 13)
    assert cfg.encdec.velocity_shape == (16, 16)
    assert cfg.synth.layer_params().n_layers_range == (2, 3)
    assert cfg.forward.wavelet().f0 == pytest.approx(40.0)
    assert cfg.forward.geometry(16).n_receivers == 16


def test_apply_overrides():
    from pairgen.config import apply_overrides

    base = {"data": {"count": 5}}
    out = apply_overrides(
        base,
        [
            "seed=3",
            "data.n_paired=2",
            "synth.family=curvevel",
            "synth.params.size=16",
            "forward.source_columns=[1, 2]",
        ],
    )
    assert out == {
        "seed": 3,
        "data": {"count": 5, "n_paired": 2},
        "synth": {"family": "curvevel", "params": {"size": 16}},
        "forward": {"source_columns": [1, 2]},
    }
    assert base == {"data": {"count": 5}}

    with pytest.raises(ValueError):
        apply_overrides({}, ["data.count"])
    with pytest.raises(ValueError):
        apply_overrides({}, ["=3"])
    with pytest.raises(ValueError):
        apply_overrides({"seed": 1}, ["seed.x=2"])


def test_load_config(tmp_path):
    from pairgen.config import load_config
    from pairgen.errors import DatasetError

    fname = tmp_path / "run.json"
    fname.write_text(json.dumps({"seed": 4, "data": {"count": 50, "n_paired": 5}}))
    cfg = load_config(str(fname), ["data.n_paired=7"])
    assert cfg.seed == 4
    assert cfg.data.count == 50 and cfg.data.n_paired == 7

    assert load_config().data.count == 2000

    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(DatasetError):
        load_config(str(bad))


def test_config_digest():
    from pairgen.config import RunConfig, config_digest

    a = RunConfig.from_dict({})
    b = RunConfig.from_dict({"output_dir": "elsewhere"})
    c = RunConfig.from_dict({"trainer": {"epochs_step1": 3}})
    d = RunConfig.from_dict({"data": {"count": 10, "n_paired": 2}})

    assert config_digest(a) == config_digest(b)
    assert config_digest(a) != config_digest(c)
    assert config_digest(a, "data", "synth", "forward") == config_digest(c, "data", "synth", "forward")
    assert config_digest(a, "data", "synth", "forward") != config_digest(d, "data", "synth", "forward")
    assert len(config_digest(a)) == 64


def test_stage_seeds():
    from pairgen.config import RunConfig, with_stage_seed

    cfg = RunConfig.from_dict({"seed": 9})
    seeds = {cfg.stage_seed(s) for s in ("synth", "split", "diffusion", "generate")}
    assert len(seeds) == 4
    assert cfg.stage_seed("synth") == RunConfig.from_dict({"seed": 9}).stage_seed("synth")
    assert cfg.stage_seed("synth") != RunConfig.from_dict({"seed": 10}).stage_seed("synth")

    trainer = with_stage_seed(cfg.trainer, cfg, "trainer:1")
    assert trainer.seed == cfg.stage_seed("trainer:1")
    assert trainer.learning_rate == cfg.trainer.learning_rate


def test_to_dict_roundtrip():
    from pairgen.config import RunConfig

    cfg = RunConfig.from_dict({"seed": 2, "synth": {"family": "flatfault"}})
    doc = json.loads(json.dumps(cfg.to_dict()))
    assert RunConfig.from_dict(doc) == cfg
