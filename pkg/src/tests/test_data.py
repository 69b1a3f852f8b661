"""Unit tests for the data package."""
import json
import os

import numpy as np
import pytest


def _velocity_samples(count, paired=(), seed=0):
    from pairgen.data import PairedSample

    rng = np.random.default_rng(seed)
    samples = []
    for i in range(count):
        ma = rng.uniform(1500, 4500, (32, 32)).astype(np.float32)
        mi = rng.normal(size=(3, 256, 32)).astype(np.float32) if i in paired else None
        samples.append(PairedSample(i, ma, mi))
    return samples


def test_to_modality():
    from pairgen.data import Modality, to_modality

    assert to_modality("velocity") == Modality.VELOCITY
    assert to_modality("VEL") == Modality.VELOCITY
    assert to_modality("s") == Modality.SEISMIC
    assert to_modality(Modality.SEISMIC) == Modality.SEISMIC
    assert Modality.VELOCITY.other == Modality.SEISMIC

    with pytest.raises(ValueError):
        to_modality("yellowbeard")
    with pytest.raises(ValueError):
        to_modality(None)


def test_velocity_map():
    from pairgen.data import VelocityMap

    vel = VelocityMap(np.full((32, 32), 2000.0))
    assert vel.shape == (32, 32)
    assert vel.v_max == 2000.0
    vel.check(1500, 4500)

    with pytest.raises(ValueError):
        vel.check(2500, 4500)
    with pytest.raises(ValueError):
        vel.check(1500, 4500, size=16)
    with pytest.raises(ValueError):
        VelocityMap(np.zeros((32, 32)))
    with pytest.raises(ValueError):
        VelocityMap(np.ones(32))


def test_seismic_gather():
    from pairgen.data import SeismicGather

    gather = SeismicGather(np.zeros((3, 256, 32)))
    assert (gather.n_sources, gather.n_times, gather.n_receivers) == (3, 256, 32)
    gather.check()

    with pytest.raises(ValueError):
        gather.check((3, 128, 32))
    bad = np.zeros((3, 256, 32))
    bad[0, 0, 0] = np.nan
    with pytest.raises(ValueError):
        SeismicGather(bad)


def test_normalization_endpoints():
    from pairgen.data import NormalizationSpec, denormalize, normalize

    spec = NormalizationSpec.from_range("velocity", 1500, 4500)
    assert normalize(np.array(3000.0), spec) == pytest.approx(0.0)
    assert normalize(np.array(1500.0), spec) == pytest.approx(-1.0)
    assert normalize(np.array(4500.0), spec) == pytest.approx(1.0)
    assert spec.range == (1500.0, 4500.0)

    x = np.random.default_rng(0).uniform(1500, 4500, 1000)
    y = normalize(x, spec)
    assert y.dtype == np.float64
    assert np.all(np.abs(y) <= 1.0)
    np.testing.assert_allclose(denormalize(y, spec), x, rtol=1e-6)

    x32 = x.astype(np.float32)
    assert normalize(x32, spec).dtype == np.float32


def test_normalization_errors():
    from pairgen.data import NormalizationSpec, normalize

    with pytest.raises(ValueError):
        NormalizationSpec("velocity", 0.0, 0.0)
    with pytest.raises(ValueError):
        NormalizationSpec("velocity", 0.0, -1.0)
    with pytest.raises(ValueError):
        NormalizationSpec.from_range("velocity", 10, 10)

    spec = NormalizationSpec.from_range("velocity", 1500, 4500)
    with pytest.raises(ValueError):
        normalize(np.zeros(3), spec, "seismic")

    # constant data still yields a usable spec
    assert NormalizationSpec.fit("seismic", np.zeros(10)).scale > 0
    assert NormalizationSpec.from_dict(spec.to_dict()) == spec


def test_split_unbalanced():
    from pairgen.data import Modality, split_unbalanced

    ids = list(range(2000))
    a = split_unbalanced(ids, 100, seed=7)
    b = split_unbalanced(ids, 100, seed=7)
    assert a.paired_ids == b.paired_ids
    assert a.n == 100 and a.m == 2000
    assert set(a.paired_ids) <= set(ids)
    assert a.majority_modality == Modality.VELOCITY
    assert split_unbalanced(ids, 100, seed=8).paired_ids != a.paired_ids

    assert split_unbalanced(ids[:10], 10, seed=0).paired_ids == ids[:10]
    assert split_unbalanced(ids[:10], 0, seed=0).n == 0

    with pytest.raises(ValueError):
        split_unbalanced(ids[:10], 11, seed=0)
    with pytest.raises(ValueError):
        split_unbalanced(ids[:10], -1, seed=0)


def test_manifest_invariants():
    from pairgen.data import DatasetManifest

    manifest = DatasetManifest("velocity", [0, 1, 2], [1], seed=0)
    manifest.validate()
    assert DatasetManifest.from_dict(manifest.to_dict()).to_dict() == manifest.to_dict()

    with pytest.raises(ValueError):
        DatasetManifest("velocity", [0, 1], [5], seed=0).validate()
    with pytest.raises(ValueError):
        DatasetManifest("velocity", [0, 0], [], seed=0).validate()
    with pytest.raises(ValueError):
        DatasetManifest.from_dict({"version": 1})


def test_save_load_roundtrip(tmp_path):
    from pairgen.data import NormalizationSpec, load_dataset, save_dataset, split_unbalanced

    samples = _velocity_samples(10, paired=(2, 5))
    manifest = split_unbalanced(range(10), 0, seed=0)
    manifest.paired_ids = [2, 5]
    manifest.normalization["velocity"] = NormalizationSpec.from_range("velocity", 1500, 4500)

    path = str(tmp_path / "data")
    save_dataset(samples, manifest, path)

    files = sorted(os.listdir(path))
    assert "manifest.json" in files
    assert len([f for f in files if f.startswith("vel_")]) == 10
    assert sorted(f for f in files if f.startswith("seis_")) == ["seis_2.f32", "seis_5.f32"]
    assert os.path.getsize(os.path.join(path, "vel_0.f32")) == 32 * 32 * 4

    loaded, loaded_manifest = load_dataset(path)
    assert loaded_manifest.paired_ids == [2, 5]
    assert loaded_manifest.normalization["velocity"].shift == 3000.0
    for a, b in zip(samples, loaded):
        assert a.id == b.id
        assert np.array_equal(a.ma, b.ma)
        assert (a.mi is None) == (b.mi is None)
        if a.mi is not None:
            assert np.array_equal(a.mi, b.mi)

    with open(os.path.join(path, "manifest.json"), encoding="utf-8") as f:
        doc = json.load(f)
    for key in ("version", "majority_modality", "shapes", "dtype", "majority_ids",
                "paired_ids", "normalization", "seed"):
        assert key in doc
    assert doc["dtype"] == "f32le"


def test_save_velocity_only(tmp_path):
    from pairgen.data import load_dataset, save_dataset, split_unbalanced

    path = str(tmp_path / "data")
    save_dataset(_velocity_samples(10), split_unbalanced(range(10), 0, seed=0), path)

    assert len(os.listdir(path)) == 11
    _, manifest = load_dataset(path)
    assert manifest.n == 0


def test_save_rejects_bad_samples(tmp_path):
    from pairgen.data import DatasetManifest, PairedSample, save_dataset
    from pairgen.errors import DatasetError

    manifest = DatasetManifest("velocity", [0, 1], [], seed=0)
    samples = _velocity_samples(2)

    with pytest.raises(DatasetError, match="sample 1"):
        save_dataset(
            [samples[0], PairedSample(1, np.ones((16, 16), np.float32))],
            manifest,
            str(tmp_path / "a"),
        )
    with pytest.raises(DatasetError):
        save_dataset(samples, DatasetManifest("velocity", [0, 1], [7], seed=0), str(tmp_path / "b"))
    with pytest.raises(DatasetError):
        save_dataset(samples[:1], manifest, str(tmp_path / "c"))


def test_load_errors(tmp_path):
    from pairgen.data import load_dataset, save_dataset, split_unbalanced
    from pairgen.errors import ArtifactMissingError, DatasetError

    with pytest.raises(ArtifactMissingError):
        load_dataset(str(tmp_path / "missing"))

    path = str(tmp_path / "data")
    save_dataset(_velocity_samples(3), split_unbalanced(range(3), 0, seed=0), path)

    # truncated tensor
    with open(os.path.join(path, "vel_1.f32"), "r+b") as f:
        f.truncate(100)
    with pytest.raises(DatasetError, match="vel_1.f32"):
        load_dataset(path)

    os.remove(os.path.join(path, "vel_1.f32"))
    with pytest.raises(DatasetError, match="vel_1.f32"):
        load_dataset(path)

    with open(os.path.join(path, "manifest.json"), "w", encoding="utf-8") as f:
        f.write("{not json")
    with pytest.raises(DatasetError, match="manifest.json"):
        load_dataset(path)


def test_stack_helpers():
    from pairgen.data import stack_majority, stack_pairs
    from pairgen.errors import DatasetError

    samples = _velocity_samples(4, paired=(1, 3))
    assert stack_majority(samples).shape == (4, 32, 32)
    ma, mi = stack_pairs(samples)
    assert ma.shape == (2, 32, 32)
    assert mi.shape == (2, 3, 256, 32)

    with pytest.raises(DatasetError):
        stack_pairs(_velocity_samples(2))


def test_checkpoint_roundtrip(tmp_path):
    from pairgen.data import load_checkpoint, save_checkpoint
    from pairgen.errors import ArtifactMissingError, DatasetError

    tensors = {"encoder.weight": np.arange(6, dtype=np.float32).reshape(2, 3)}
    save_checkpoint(str(tmp_path / "ckpt"), tensors, {"kind": "test", "step": 3})

    loaded, meta = load_checkpoint(str(tmp_path / "ckpt"))
    assert np.array_equal(loaded["encoder.weight"], tensors["encoder.weight"])
    assert meta == {"kind": "test", "step": 3}

    with pytest.raises(ArtifactMissingError):
        load_checkpoint(str(tmp_path / "none"))
    with pytest.raises(DatasetError):
        save_checkpoint(str(tmp_path / "bad"), {"../escape": np.zeros(1)})
