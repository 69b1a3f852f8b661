"""Two-step training versus the one-step ablation, across seeds.

Each seed synthesizes its own corpus, trains both pipelines end to end and scores
them on held-out reconstruction and on pairwise consistency of generated data.
"""
from dataclasses import asdict, dataclass, field, replace
import logging

from .config import RunConfig, with_stage_seed
from .data import Modality, PairedSample, stack_majority
from .diffusion import generate_pairs, train_diffusion
from .evaluation import pairwise_eval, train_inversion_lite
from .evaluation.pairwise import split_modalities
from .factory import forward_corpus, gen_corpus
from .pipeline import normalize_samples, synthesize
from .training import build_network, train_onestep_ablation, train_step1, train_step2

_logger = logging.getLogger(__name__)

VARIANTS = ("two_step", "ablation")


@dataclass
class SeedOutcome:
    """Scores of both variants for one seed; lower is better everywhere."""

    seed: int
    val_mae: dict = field(default_factory=dict)
    pairwise_mae: dict = field(default_factory=dict)

    @property
    def reconstruction_win(self) -> bool:
        return self.val_mae["two_step"] < self.val_mae["ablation"]

    @property
    def pairwise_win(self) -> bool:
        return self.pairwise_mae["two_step"] < self.pairwise_mae["ablation"]


@dataclass
class DirectionalResult:
    outcomes: list = field(default_factory=list)

    @property
    def required(self) -> int:
        return len(self.outcomes) // 2 + 1

    @property
    def reconstruction_wins(self) -> int:
        return sum(o.reconstruction_win for o in self.outcomes)

    @property
    def pairwise_wins(self) -> int:
        return sum(o.pairwise_win for o in self.outcomes)

    @property
    def passed(self) -> bool:
        return min(self.reconstruction_wins, self.pairwise_wins) >= self.required

    def to_dict(self) -> dict:
        return {
            "outcomes": [asdict(o) for o in self.outcomes],
            "reconstruction_wins": self.reconstruction_wins,
            "pairwise_wins": self.pairwise_wins,
            "passed": self.passed,
        }


def real_test_pairs(cfg: RunConfig, manifest, count: int) -> list[PairedSample]:
    """Fresh real pairs, disjoint from the corpus seeds, normalized like the corpus."""
    params = cfg.synth.layer_params()
    vels = gen_corpus(cfg.synth.family, count, params, cfg.stage_seed("test"))
    gathers = forward_corpus(
        vels, cfg.forward.geometry(params.size), cfg.forward.wavelet(), cfg.forward.solver()
    )
    majority = manifest.majority_modality
    raw = []
    for i, (v, g) in enumerate(zip(vels, gathers)):
        arrays = {Modality.VELOCITY: v.grid, Modality.SEISMIC: g.traces}
        raw.append(PairedSample(i, arrays[majority], arrays[majority.other]))
    return normalize_samples(raw, manifest)


def _train_variant(cfg: RunConfig, variant: str, samples: list[PairedSample], progress: bool):
    trainer = with_stage_seed(cfg.trainer, cfg, "trainer")
    net = build_network(cfg.encdec, cfg.stage_seed("encdec:init"))
    pairs = [s for s in samples if s.paired]
    if variant == "two_step":
        train_step1(net, stack_majority(samples), trainer, progress=progress)
        report = train_step2(net, pairs, trainer, progress=progress)
    else:
        report = train_onestep_ablation(net, pairs, trainer, progress=progress)
    return net, report


def run_seed(
    cfg: RunConfig,
    seed: int,
    generated: int = 2000,
    test_count: int = 200,
    progress: bool = False,
) -> SeedOutcome:
    """Train and score both variants for one global seed."""
    cfg = replace(cfg, seed=seed)
    raw, manifest = synthesize(cfg)
    samples = normalize_samples(raw, manifest)
    test = real_test_pairs(cfg, manifest, test_count)

    outcome = SeedOutcome(seed)
    for variant in VARIANTS:
        net, report = _train_variant(cfg, variant, samples, progress)
        outcome.val_mae[variant] = report.val_mae

        state = train_diffusion(
            net,
            stack_majority(samples),
            with_stage_seed(cfg.diffusion, cfg, "diffusion"),
            progress=progress,
        )
        pairs = generate_pairs(state, net, generated, seed=cfg.stage_seed("generate"))
        gen = [PairedSample(i, *p) for i, p in enumerate(pairs)]
        seis, vel = split_modalities(gen, Modality.VELOCITY)
        model, meta = train_inversion_lite(
            seis, vel, cfg.evaluation.inversion_config(cfg.stage_seed("inversion"))
        )
        result = pairwise_eval(model, test, manifest.majority_modality, meta)
        outcome.pairwise_mae[variant] = result.mae
        _logger.info(
            "seed %d %s: val MAE %.4f, pairwise MAE %.4f",
            seed,
            variant,
            report.val_mae,
            result.mae,
        )
    return outcome


def directional_experiment(
    cfg: RunConfig, seeds=(0, 1, 2), generated: int = 2000, test_count: int = 200,
    progress: bool = False,
) -> DirectionalResult:
    """Run both variants over several seeds and count the two-step wins.

    The two-step pipeline passes when it beats the ablation on held-out
    reconstruction MAE and on pairwise MAE, each in a majority of seeds.
    """
    result = DirectionalResult()
    for seed in seeds:
        result.outcomes.append(run_seed(cfg, seed, generated, test_count, progress))
    _logger.info(
        "two-step wins: reconstruction %d/%d, pairwise %d/%d",
        result.reconstruction_wins,
        len(seeds),
        result.pairwise_wins,
        len(seeds),
    )
    return result
