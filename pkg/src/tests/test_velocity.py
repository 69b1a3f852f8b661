"""Unit tests for velocity.py."""
import numpy as np
import pytest


def runs(column) -> int:
    """Number of contiguous constant runs in a column."""
    column = np.asarray(column)
    return 1 + int(np.count_nonzero(column[1:] != column[:-1]))


def top_interface(grid) -> np.ndarray:
    """Per column, the first row whose value differs from row 0 (H when none)."""
    grid = np.asarray(grid)
    height = grid.shape[0]
    differs = grid != grid[0][None, :]
    return np.where(differs.any(axis=0), differs.argmax(axis=0), height)


def classify(grid) -> str:
    depth = top_interface(grid)
    jumps = np.abs(np.diff(depth))
    if jumps.max() >= 2:
        return "flatfault"
    if jumps.max() == 0 and np.all(grid == grid[:, :1]):
        return "flatvel"
    return "curvevel"


def test_params_quantities():
    from pairgen.factory import LayerModelParams

    params = LayerModelParams(spacing="0.01 km", v_min="1.5 km/s", v_max=4500)
    assert params.spacing == pytest.approx(10.0)
    assert params.v_min == pytest.approx(1500.0)
    params.validate()


def test_params_invalid():
    from pairgen.factory import LayerModelParams

    with pytest.raises(ValueError):
        LayerModelParams(n_layers_range=(4, 2)).validate()
    with pytest.raises(ValueError):
        LayerModelParams(n_layers_range=(0, 2)).validate()
    with pytest.raises(ValueError):
        LayerModelParams(v_increment_range=(-10, 100)).validate()
    with pytest.raises(ValueError):
        LayerModelParams(v_top_range=(1000, 2000)).validate()
    with pytest.raises(ValueError):
        LayerModelParams(curvature_amplitude=32).validate()
    with pytest.raises(ValueError):
        LayerModelParams(fault_throw_range=(0, 32)).validate()
    with pytest.raises(ValueError):
        LayerModelParams(n_layers_range=(2, 40)).validate()


def test_gen_flat_single_layer():
    from pairgen.factory import LayerModelParams, gen_flat

    vel = gen_flat(LayerModelParams(n_layers_range=(1, 1), v_top_range=(2000, 2000)), 3)
    assert vel.shape == (32, 32)
    assert np.all(vel.grid == 2000.0)


def test_gen_flat_layers():
    from pairgen.factory import LayerModelParams, gen_flat

    params = LayerModelParams(n_layers_range=(3, 3))
    vel = gen_flat(params, 42)
    for col in vel.grid.T:
        assert runs(col) == 3
    assert np.array_equal(vel.grid, gen_flat(params, 42).grid)

    params = LayerModelParams()
    for seed in range(100):
        grid = gen_flat(params, seed).grid
        # every row holds a single value
        assert np.all(grid == grid[:, :1])
        assert np.all(np.diff(grid, axis=0) >= 0)
        assert grid.min() >= params.v_min and grid.max() <= params.v_max


def test_gen_curved():
    from pairgen.factory import LayerModelParams, gen_curved, gen_flat

    flat = LayerModelParams(n_layers_range=(3, 5))
    for seed in range(5):
        assert np.array_equal(gen_curved(flat, seed).grid, gen_flat(flat, seed).grid)

    amplitude = 6
    params = LayerModelParams(n_layers_range=(4, 4), curvature_amplitude=amplitude)
    for seed in range(50):
        grid = gen_curved(params, seed).grid
        assert all(runs(col) == 4 for col in grid.T)
        assert np.all(np.diff(grid, axis=0) >= 0)

        # each interface moves at most `amplitude` rows across the columns
        rows = np.array([np.flatnonzero(np.diff(col)) for col in grid.T])
        assert rows.shape == (32, 3)
        assert np.all(rows.max(axis=0) - rows.min(axis=0) <= amplitude)


def test_apply_fault():
    from pairgen.factory import LayerModelParams, apply_fault, gen_flat

    grid = gen_flat(LayerModelParams(n_layers_range=(4, 4)), 1).grid

    assert np.array_equal(apply_fault(grid, 0, 16.0, 70.0), grid)

    faulted = apply_fault(grid, 4, 16.0, 90.0)
    expected = grid.copy()
    expected[4:, 16:] = grid[:-4, 16:]
    expected[:4, 16:] = grid[0, 16:]
    assert np.array_equal(faulted, expected)
    assert set(np.unique(faulted)) == set(np.unique(grid))

    with pytest.raises(ValueError):
        apply_fault(grid, -1, 16.0, 90.0)
    with pytest.raises(ValueError):
        apply_fault(grid, 2, 16.0, 0.0)


def test_gen_faulted():
    from pairgen.factory import LayerModelParams, gen_faulted

    with pytest.raises(ValueError):
        gen_faulted(LayerModelParams(), 0)

    params = LayerModelParams(fault_throw_range=(3, 8))
    a = gen_faulted(params, 9)
    assert np.array_equal(a.grid, gen_faulted(params, 9).grid)
    assert a.grid.min() >= params.v_min and a.grid.max() <= params.v_max


def test_family_separability():
    from pairgen.factory import gen_corpus

    for family in ("flatvel", "curvevel", "flatfault"):
        corpus = gen_corpus(family, 100, seed=1000)
        assert [classify(v.grid) for v in corpus] == [family] * 100


def test_gen_corpus():
    from pairgen.factory import Family, family_params, gen_corpus, gen_family, to_family

    corpus = gen_corpus("flatvel", 20, seed=5)
    again = gen_corpus(Family.FLATVEL, 20, seed=5)
    assert all(np.array_equal(a.grid, b.grid) for a, b in zip(corpus, again))
    assert corpus[0].grid.dtype == np.float32

    params = family_params("curvefault")
    batch = gen_corpus("curvefault", 15, params, seed=100)
    alone = gen_family("curvefault", params, 100 + 12)
    assert np.array_equal(batch[12].grid, alone.grid)

    assert to_family("Curve-Fault") == Family.CURVEFAULT
    with pytest.raises(ValueError):
        to_family("yellowbeard")
    with pytest.raises(ValueError):
        gen_corpus("flatvel", 0)


def test_family_defaults():
    from pairgen.factory import FAMILY_DEFAULTS, Family, family_params

    assert FAMILY_DEFAULTS[Family.FLATVEL].lr_decay == 0.9
    assert FAMILY_DEFAULTS[Family.CURVEVEL].learning_rate == 5e-4
    assert family_params("curvevel").curvature_amplitude > 0
    assert family_params("flatvel", size=16).size == 16
