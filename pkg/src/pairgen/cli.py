"""The `pairgen` command line: synth, train-encdec, train-diff, generate, eval, plot."""
import argparse
from dataclasses import replace
import logging
import os
import sys

from . import hooks
from .config import RunConfig, config_digest, load_config, with_stage_seed
from .data import (
    DatasetManifest,
    Modality,
    load_dataset,
    load_manifest,
    save_dataset,
    stack_majority,
)
from .data.container import MANIFEST_NAME, read_json
from .diffusion import (
    generate_pairs,
    load_denoiser,
    save_denoiser,
    train_diffusion,
)
from .errors import ArtifactMissingError, NumericalError
from .evaluation import (
    EvaluationReport,
    eval_fid,
    mean_predictor,
    pairwise_eval,
    physics_aggregate,
    train_inversion_lite,
)
from .evaluation.pairwise import split_modalities
from .factory import to_family
from .pipeline import (
    denormalize_pairs,
    generated_manifest,
    modality_arrays,
    norm_from_metadata,
    norm_to_metadata,
    normalize_samples,
    synthesize,
)
from .plotting import plot_samples
from .training import (
    build_network,
    load_network,
    run_freeze_selection,
    save_network,
    train_onestep_ablation,
    train_step1,
    train_step2,
)
from .utils import Artifacts

_logger = logging.getLogger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_MISSING = 0, 1, 2, 3

DATA = "data"
GENERATED = "generated"
REPORTS = "reports"
STEP1, STEP2, ABLATION = "checkpoints/step1", "checkpoints/step2", "checkpoints/ablation"
DIFFUSION = "checkpoints/diffusion"
METRICS = "metrics.jsonl"
DATA_CONSUMERS = ("train-encdec", "train-diff", "generate", "eval")


class UsageParser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _artifacts(cfg: RunConfig) -> Artifacts:
    return Artifacts(cfg.output_dir)


def _load_normalized(path: str):
    samples, manifest = load_dataset(path)
    return normalize_samples(samples, manifest), manifest


def cmd_synth(cfg: RunConfig, family: str = None, count: int = None, n_paired: int = None):
    """Synthesize the unbalanced dataset; a rerun with the same settings is a no-op.

    Returns:
        str: The dataset directory.
    """
    cfg = replace(
        cfg,
        synth=replace(cfg.synth, family=family or cfg.synth.family),
        data=replace(
            cfg.data,
            count=cfg.data.count if count is None else count,
            n_paired=cfg.data.n_paired if n_paired is None else n_paired,
        ),
    )
    cfg.validate()

    artifacts = _artifacts(cfg)
    digest = config_digest(cfg, "data", "synth", "forward")
    latest = artifacts.latest(DATA)
    if latest and os.path.isfile(os.path.join(latest, MANIFEST_NAME)):
        if load_manifest(latest).config_digest == digest:
            _logger.info("already synthesized: %s", latest)
            return latest

    samples, manifest = synthesize(cfg)
    path = artifacts.new_version(DATA)
    save_dataset(samples, manifest, path)
    return path


def cmd_train_encdec(cfg: RunConfig, step: str, freeze: str = None):
    """Train step 1, step 2 or the one-step ablation and write a checkpoint.

    Raises:
        ArtifactMissingError: When the dataset or, for step 2, the step-1
        checkpoint is missing.

    Returns:
        str: The checkpoint directory.
    """
    artifacts = _artifacts(cfg)
    data_path = artifacts.require(DATA)
    samples, manifest = _load_normalized(data_path)
    trainer = with_stage_seed(cfg.trainer, cfg, f"trainer:{step}")
    extra = {"dataset": data_path, "normalization": norm_to_metadata(manifest.normalization)}

    if step == "1":
        net = build_network(cfg.encdec, cfg.stage_seed("encdec:init"))
        path = artifacts.new_version(STEP1)
        report = train_step1(
            net, stack_majority(samples), trainer, os.path.join(path, METRICS)
        )
    elif step == "2":
        step1 = artifacts.require(STEP1)
        net, _ = load_network(step1)
        pairs = [s for s in samples if s.paired]
        path = artifacts.new_version(STEP2)
        metrics = os.path.join(path, METRICS)
        if freeze == "auto":
            best, runs = run_freeze_selection(net, pairs, trainer, metrics_path=metrics)
            net, report = runs[best]
            extra["selection"] = {
                "selected": best,
                "val_mae": {str(f): runs[f][1].val_mae for f in (0, 1)},
            }
        else:
            flag = trainer.freeze if freeze is None else int(freeze)
            report = train_step2(net, pairs, trainer, freeze=flag, metrics_path=metrics)
        extra["step1"] = step1
    elif step == "ablation":
        net = build_network(cfg.encdec, cfg.stage_seed("encdec:init"))
        path = artifacts.new_version(ABLATION)
        report = train_onestep_ablation(
            net, [s for s in samples if s.paired], trainer, os.path.join(path, METRICS)
        )
    else:
        raise ValueError(f"unknown training step {step}")

    save_network(net, path, report, **extra)
    _logger.info("wrote %s checkpoint %s", report.step, path)
    return path


def cmd_train_diff(cfg: RunConfig, encdec: str = "step2", resume: bool = False):
    """Train the latent denoiser on the encoded majority corpus.

    Raises:
        ArtifactMissingError: When the encoder checkpoint is missing.

    Returns:
        str: The denoiser checkpoint directory.
    """
    artifacts = _artifacts(cfg)
    kind = {"step2": STEP2, "ablation": ABLATION}[encdec]
    net_path = artifacts.require(kind)
    net, meta = load_network(net_path)

    data_path = meta.get("dataset") or artifacts.require(DATA)
    samples, _ = _load_normalized(data_path)
    diff_cfg = with_stage_seed(cfg.diffusion, cfg, "diffusion")

    state = None
    if resume:
        previous = artifacts.require(DIFFUSION)
        state = load_denoiser(previous)
        _logger.info("resuming denoiser from %s at step %d", previous, state.step)

    path = artifacts.new_version(DIFFUSION)
    state = train_diffusion(
        net,
        stack_majority(samples),
        diff_cfg,
        state=state,
        metrics_path=os.path.join(path, METRICS),
    )
    save_denoiser(state, path, {"encdec": net_path})
    if len(state.history) > 1:
        _logger.info("denoiser loss %.6f -> %.6f", state.history[0], state.history[-1])
    return path


def cmd_generate(cfg: RunConfig, count: int = None, seed: int = None, out: str = None):
    """Generate a fully paired dataset in physical units.

    Raises:
        ArtifactMissingError: When the denoiser or network checkpoint is missing.

    Returns:
        str: The generated dataset directory.
    """
    artifacts = _artifacts(cfg)
    diff_path = artifacts.require(DIFFUSION)
    state = load_denoiser(diff_path)
    meta = read_json(os.path.join(diff_path, "checkpoint.json"))["metadata"]
    net_path = meta.get("encdec")
    if not net_path or not os.path.isdir(net_path):
        raise ArtifactMissingError(f"network checkpoint {net_path} of {diff_path} is missing")
    net, net_meta = load_network(net_path)

    norm = norm_from_metadata(net_meta)
    if {m.value for m in Modality} - set(norm):
        raise ValueError(f"checkpoint {net_path} lacks normalization for both modalities")

    count = cfg.generate.count if count is None else count
    seed = cfg.stage_seed("generate") if seed is None else seed
    pairs = generate_pairs(
        state,
        net,
        count,
        seed=seed,
        sampler=cfg.generate.sampler,
        steps=cfg.generate.steps,
        batch_size=cfg.generate.batch_size,
    )
    majority = net.majority
    samples = denormalize_pairs(pairs, norm, majority)
    shapes = {m.value: net.shape_of(m) for m in Modality}
    manifest = generated_manifest(
        count,
        norm,
        majority,
        shapes,
        seed,
        attributes={"denoiser": diff_path, "encdec": net_path, "sampler": cfg.generate.sampler},
    )

    path = out or artifacts.new_version(GENERATED)
    save_dataset(samples, manifest, path)
    return path


def _physics_pairs(samples, manifest: DatasetManifest, limit: int):
    pairs = []
    for s in samples[:limit]:
        arrays = {manifest.majority_modality: s.ma, manifest.minority_modality: s.mi}
        pairs.append((arrays[Modality.VELOCITY], arrays[Modality.SEISMIC]))
    return pairs


def cmd_eval(
    cfg: RunConfig,
    real: str = None,
    generated: str = None,
    axes: list[str] = None,
    out: str = None,
):
    """Evaluate a generated dataset against a real one and write report.json.

    Raises:
        ArtifactMissingError: When a dataset is missing.

    Returns:
        str: The report file.
    """
    artifacts = _artifacts(cfg)
    real = real or artifacts.require(DATA)
    generated = generated or artifacts.require(GENERATED)
    axes = list(axes or cfg.evaluation.axes)

    real_raw, real_manifest = load_dataset(real)
    gen_raw, gen_manifest = load_dataset(generated)
    norm = real_manifest.normalization
    real_norm = normalize_samples(real_raw, real_manifest)
    gen_norm = normalize_samples(gen_raw, gen_manifest, norm)

    report = EvaluationReport(config=cfg.to_dict(), inputs={"real": real, "generated": generated})

    if "fid" in axes:
        for modality in Modality:
            a = modality_arrays(real_norm, real_manifest, modality)
            b = modality_arrays(gen_norm, gen_manifest, modality)
            if len(a) < 2 or len(b) < 2:
                _logger.warning("not enough %s samples for FID", modality.value)
                continue
            spec = cfg.evaluation.feature_spec(modality.value, cfg.stage_seed("fid"))
            report.fid[modality.value] = eval_fid(a, b, spec)

    if "pairwise" in axes:
        seis, vel = split_modalities(gen_norm, gen_manifest.majority_modality)
        inv_cfg = cfg.evaluation.inversion_config(cfg.stage_seed("inversion"))
        model, meta = train_inversion_lite(seis, vel, inv_cfg)
        test = [s for s in real_norm if s.paired]
        result = pairwise_eval(model, test, real_manifest.majority_modality, meta)
        floor = pairwise_eval(mean_predictor(vel), test, real_manifest.majority_modality)
        report.pairwise = {**result.to_dict(), "mean_predictor": floor.to_dict()}

    if "physics" in axes:
        missing = {m.value for m in Modality} - set(gen_manifest.normalization)
        if missing:
            raise ValueError(
                f"{generated} has no {sorted(missing)} normalization; physics needs "
                "both modalities in physical units"
            )
        size = gen_manifest.shape_of(Modality.VELOCITY)[1]
        summary = physics_aggregate(
            _physics_pairs(
                [s for s in gen_raw if s.paired], gen_manifest, cfg.evaluation.physics_samples
            ),
            cfg.forward.geometry(size),
            cfg.forward.wavelet(),
            cfg.forward.solver(),
            spacing=cfg.synth.layer_params().spacing,
        )
        report.physics = {
            "mean": summary.mean,
            "median": summary.median,
            "skipped": summary.skipped,
            "count": summary.count,
        }

    if out is None:
        out = os.path.join(artifacts.new_version(REPORTS), "report.json")
    report.write(out)
    return out


def cmd_plot(dataset: str, indices: list[int], out: str):
    """Write heatmaps of selected samples of a dataset.

    Raises:
        IndexError: When an index is out of range.

    Returns:
        list[str]: The PNG files.
    """
    samples, manifest = load_dataset(dataset)
    return plot_samples(samples, indices, manifest.majority_modality, out)


def _dataset_family(path: str) -> str | None:
    if not path or not os.path.isfile(os.path.join(path, MANIFEST_NAME)):
        return None
    return load_manifest(path).attributes.get("family")


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Load the configuration of a command, following the family of its data.

    `synth --family` and, for the commands that read a dataset, the family recorded
    in that dataset are applied as a `synth.family` override before the family
    defaults are filled in. Trainer settings given explicitly still win.

    Raises:
        DatasetError: When the file or a dataset manifest is not valid JSON.
        ValueError: When the document is not a valid configuration.
    """
    fname = getattr(args, "config", None)
    overrides = list(getattr(args, "overrides", None) or [])
    if args.command == "synth" and args.family:
        overrides.append(f"synth.family={args.family}")
    cfg = load_config(fname, overrides)

    if args.command in DATA_CONSUMERS:
        family = _dataset_family(getattr(args, "real", None) or _artifacts(cfg).latest(DATA))
        if family and to_family(family) != to_family(cfg.synth.family):
            _logger.info("dataset family is %s, using its defaults", family)
            cfg = load_config(fname, overrides + [f"synth.family={family}"])
    return cfg


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    hooks.pre_init(common)

    parser = UsageParser(prog="pairgen", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=UsageParser)

    synth = sub.add_parser("synth", parents=[common], help="Synthesize the dataset.")
    synth.add_argument("--family", choices=["flatvel", "curvevel", "flatfault", "curvefault"])
    synth.add_argument("--count", type=int)
    synth.add_argument("--n-paired", type=int, dest="n_paired")
    synth.set_defaults(
        func=lambda cfg, a: cmd_synth(cfg, a.family, a.count, a.n_paired)
    )

    enc = sub.add_parser("train-encdec", parents=[common], help="Train the encoder-decoder.")
    enc.add_argument("--step", choices=["1", "2", "ablation"], required=True)
    enc.add_argument("--freeze", choices=["0", "1", "auto"])
    enc.set_defaults(func=lambda cfg, a: cmd_train_encdec(cfg, a.step, a.freeze))

    diff = sub.add_parser("train-diff", parents=[common], help="Train the latent denoiser.")
    diff.add_argument("--encdec", choices=["step2", "ablation"], default="step2")
    diff.add_argument("--resume", action="store_true")
    diff.set_defaults(func=lambda cfg, a: cmd_train_diff(cfg, a.encdec, a.resume))

    gen = sub.add_parser("generate", parents=[common], help="Generate paired samples.")
    gen.add_argument("--count", type=int)
    gen.add_argument("--seed", type=int)
    gen.add_argument("--out")
    gen.set_defaults(func=lambda cfg, a: cmd_generate(cfg, a.count, a.seed, a.out))

    ev = sub.add_parser("eval", parents=[common], help="Evaluate generated data.")
    ev.add_argument("--real")
    ev.add_argument("--generated")
    ev.add_argument("--axes", nargs="+", choices=["fid", "pairwise", "physics"])
    ev.add_argument("--out")
    ev.set_defaults(func=lambda cfg, a: cmd_eval(cfg, a.real, a.generated, a.axes, a.out))

    plot = sub.add_parser("plot", parents=[common], help="Plot dataset samples.")
    plot.add_argument("dataset")
    plot.add_argument("--indices", type=int, nargs="+", default=[0])
    plot.add_argument("--out", required=True)
    plot.set_defaults(func=lambda cfg, a: cmd_plot(a.dataset, a.indices, a.out))
    return parser


def main(argv: list[str] = None) -> int:
    """Run one command.

    Returns:
        int: 0 on success, 1 for usage or configuration errors, 2 for a numerical
        abort, 3 for a missing artifact.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = resolve_config(args)
        hooks.post_init(args, seed=cfg.seed)
        result = args.func(cfg, args)
    except ArtifactMissingError as e:
        _logger.error("%s", e)
        return EXIT_MISSING
    except NumericalError as e:
        _logger.error("numerical failure: %s", e)
        return EXIT_NUMERICAL
    except (ValueError, IndexError) as e:
        _logger.error("%s", e)
        return EXIT_USAGE

    if result is not None:
        print(result if not isinstance(result, list) else "\n".join(result))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
