"""Unit tests for experiments.py."""
import pytest


def _outcome(seed, val, pairwise):
    from pairgen.experiments import SeedOutcome

    return SeedOutcome(
        seed,
        {"two_step": val[0], "ablation": val[1]},
        {"two_step": pairwise[0], "ablation": pairwise[1]},
    )


def test_seed_outcome():
    """Unit test SeedOutcome wins."""
    o = _outcome(0, (0.1, 0.2), (0.3, 0.25))
    assert o.reconstruction_win
    assert not o.pairwise_win

    tie = _outcome(1, (0.2, 0.2), (0.2, 0.2))
    assert not tie.reconstruction_win and not tie.pairwise_win


def test_directional_result():
    """Unit test DirectionalResult majority counting."""
    from pairgen.experiments import DirectionalResult

    result = DirectionalResult(
        [
            _outcome(0, (0.1, 0.2), (0.1, 0.2)),
            _outcome(1, (0.3, 0.2), (0.1, 0.2)),
            _outcome(2, (0.1, 0.2), (0.3, 0.2)),
        ]
    )
    assert result.required == 2
    assert result.reconstruction_wins == 2
    assert result.pairwise_wins == 2
    assert result.passed

    data = result.to_dict()
    assert data["passed"] is True
    assert [o["seed"] for o in data["outcomes"]] == [0, 1, 2]
    assert data["outcomes"][1]["val_mae"] == {"two_step": 0.3, "ablation": 0.2}

    result.outcomes.append(_outcome(3, (0.3, 0.2), (0.3, 0.2)))
    assert result.required == 3
    assert not result.passed

    assert DirectionalResult().required == 1
    assert not DirectionalResult().passed


def test_real_test_pairs(small_run):
    """Unit test real_test_pairs against the corpus normalization."""
    import numpy as np

    from pairgen.config import RunConfig
    from pairgen.experiments import real_test_pairs
    from pairgen.pipeline import synthesize

    cfg = RunConfig.from_dict(small_run)
    raw, manifest = synthesize(cfg)
    test = real_test_pairs(cfg, manifest, 3)

    assert len(test) == 3 and all(s.paired for s in test)
    assert test[0].ma.shape == (16, 16)
    assert test[0].mi.shape == (3, 128, 16)
    # a disjoint seed stream
    assert not any(np.array_equal(t.ma, s.ma) for t in test for s in raw)


@pytest.mark.acceptance
def test_two_step_beats_ablation(run_dir):
    """Acceptance test: two-step training wins in a majority of seeds."""
    from pairgen.config import RunConfig
    from pairgen.experiments import directional_experiment

    cfg = RunConfig.from_dict(
        {
            "output_dir": run_dir,
            "data": {"count": 2000, "n_paired": 100},
            "synth": {"family": "flatvel"},
            "trainer": {"epochs_step1": 60, "epochs_step2": 60, "batch_size": 32},
            "diffusion": {"steps": 4000, "batch_size": 64},
            "evaluation": {"inversion": {"epochs": 40}},
        }
    )
    assert (cfg.data.count, cfg.data.n_paired) == (2000, 100)
    result = directional_experiment(cfg, seeds=(0, 1, 2), generated=2000, test_count=200)

    assert result.required == 2
    assert result.passed, result.to_dict()
