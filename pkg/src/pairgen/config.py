"""Run configuration: one JSON document with a section per pipeline stage."""
from dataclasses import asdict, dataclass, field, fields, replace
import hashlib
import json
import logging
import os

from .data import to_modality
from .data.container import read_json
from .diffusion import DiffusionTrainConfig
from .evaluation import FeatureExtractorSpec, InversionConfig
from .factory import (
    FAMILY_DEFAULTS,
    AcquisitionGeometry,
    LayerModelParams,
    SolverConfig,
    family_params,
    ricker,
    to_family,
)
from .models import EncDecConfig
from .training import TrainConfig
from .utils import derive_seed, is_creatable_dir

_logger = logging.getLogger(__name__)

AXES = ("fid", "pairwise", "physics")
SAMPLERS = ("deterministic", "ancestral")


@dataclass(frozen=True)
class DataConfig:
    """Corpus size and pairing."""

    count: int = 2000
    n_paired: int = 100
    majority_modality: str = "velocity"


@dataclass(frozen=True)
class SynthConfig:
    """Velocity family and overrides of its default generator parameters."""

    family: str = "flatvel"
    params: dict = field(default_factory=dict)

    def layer_params(self) -> LayerModelParams:
        params = {k: tuple(v) if isinstance(v, list) else v for k, v in self.params.items()}
        try:
            return family_params(self.family, **params)
        except TypeError as e:
            raise ValueError(f"unknown generator parameter in synth.params: {e}") from e


@dataclass(frozen=True)
class ForwardConfig:
    """Wavelet, acquisition and solver settings.

    `f0` and `dt` accept astropy strings such as "15 Hz" or "1 ms".
    """

    f0: float | str = 15.0
    dt: float | str = 1e-3
    nt: int = 256
    source_columns: tuple = (4, 16, 27)
    receiver_row: int = 0
    sponge_width: int = 15
    sponge_strength: float = 0.3
    cfl_safety: float = 0.9

    def geometry(self, width: int) -> AcquisitionGeometry:
        return AcquisitionGeometry.surface(width, tuple(self.source_columns), self.receiver_row)

    def wavelet(self):
        return ricker(self.f0, self.dt, self.nt)

    def solver(self) -> SolverConfig:
        return SolverConfig(
            dt=self.dt,
            nt=self.nt,
            sponge_width=self.sponge_width,
            sponge_strength=self.sponge_strength,
            cfl_safety=self.cfl_safety,
        )


@dataclass(frozen=True)
class GenerateConfig:
    """Sampling settings of the generate command."""

    count: int = 2000
    sampler: str = "deterministic"
    steps: int = None
    batch_size: int = 64


@dataclass(frozen=True)
class EvalConfig:
    """Evaluation axes and their settings."""

    axes: tuple = AXES
    extractor: str = "fixed_random_conv"
    feature_dim: int = 64
    inversion: dict = field(default_factory=dict)
    physics_samples: int = 100

    def feature_spec(self, modality: str, seed: int) -> FeatureExtractorSpec:
        return FeatureExtractorSpec(modality, self.extractor, self.feature_dim, seed)

    def inversion_config(self, seed: int) -> InversionConfig:
        return InversionConfig(**{"seed": seed, **self.inversion})


SECTIONS = {
    "data": DataConfig,
    "synth": SynthConfig,
    "forward": ForwardConfig,
    "encdec": EncDecConfig,
    "trainer": TrainConfig,
    "diffusion": DiffusionTrainConfig,
    "generate": GenerateConfig,
    "evaluation": EvalConfig,
}


@dataclass(frozen=True)
class RunConfig:
    """Every stage setting plus the global seed and output directory.

    Stage seeds are derived from `seed`; the `seed` fields inside the trainer and
    diffusion sections are overwritten by `stage_seed`.
    """

    seed: int = 0
    output_dir: str = "runs/default"
    data: DataConfig = field(default_factory=DataConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)
    forward: ForwardConfig = field(default_factory=ForwardConfig)
    encdec: EncDecConfig = field(default_factory=EncDecConfig)
    trainer: TrainConfig = field(default_factory=TrainConfig)
    diffusion: DiffusionTrainConfig = field(default_factory=DiffusionTrainConfig)
    generate: GenerateConfig = field(default_factory=GenerateConfig)
    evaluation: EvalConfig = field(default_factory=EvalConfig)

    def stage_seed(self, stage: str) -> int:
        return derive_seed(self.seed, stage)

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(data: dict) -> "RunConfig":
        """Build a config from a (partial) document.

        Raises:
            ValueError: When a section or key is unknown, or a value is invalid.
        """
        if not isinstance(data, dict):
            raise ValueError("configuration must be a JSON object")
        unknown = set(data) - {"seed", "output_dir"} - set(SECTIONS)
        if unknown:
            raise ValueError(f"unknown configuration sections {sorted(unknown)}")

        kwargs = {k: data[k] for k in ("seed", "output_dir") if k in data}
        data = _fill_defaults(data)

        for name, cls in SECTIONS.items():
            kwargs[name] = _section(name, cls, data.get(name, {}))
        cfg = RunConfig(**kwargs)
        cfg.validate()
        return cfg

    def validate(self):
        """Check cross-section consistency and every section's own invariants.

        Raises:
            ValueError: When a value is invalid.
        """
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ValueError(f"seed must be a non-negative integer, got {self.seed}")
        if not is_creatable_dir(self.output_dir):
            raise ValueError(f"output_dir {self.output_dir} cannot be created")

        to_family(self.synth.family)
        params = self.synth.layer_params()
        params.validate()
        if not 0 <= self.data.n_paired <= self.data.count:
            raise ValueError(
                f"n_paired must be in [0, count={self.data.count}], got {self.data.n_paired}"
            )
        majority = to_modality(self.data.majority_modality)
        if to_modality(self.encdec.majority_modality) != majority:
            raise ValueError("data and encdec sections disagree on the majority modality")
        if to_modality(self.trainer.majority_modality) != majority:
            raise ValueError("trainer and encdec sections disagree on the majority modality")

        self.encdec.validate()
        if tuple(self.encdec.velocity_shape) != (params.size, params.size):
            raise ValueError(
                f"encdec velocity_shape {self.encdec.velocity_shape} does not match the "
                f"synthesized map size {params.size}"
            )
        expected = (len(self.forward.source_columns), self.forward.nt, params.size)
        if tuple(self.encdec.seismic_shape) != expected:
            raise ValueError(
                f"encdec seismic_shape {self.encdec.seismic_shape} does not match the "
                f"acquisition {expected}"
            )
        self.forward.geometry(params.size).validate((params.size, params.size))
        self.forward.wavelet()
        self.forward.solver()

        self.trainer.validate()
        self.diffusion.validate()
        if self.generate.count < 1 or self.generate.batch_size < 1:
            raise ValueError("generate count and batch_size must be >= 1")
        if self.generate.sampler not in SAMPLERS:
            raise ValueError(f"unknown sampler {self.generate.sampler}")
        bad = set(self.evaluation.axes) - set(AXES)
        if bad:
            raise ValueError(f"unknown evaluation axes {sorted(bad)}")
        self.evaluation.feature_spec("velocity", 0)
        self.evaluation.inversion_config(0).validate()


def _section(name: str, cls, values: dict):
    if not isinstance(values, dict):
        raise ValueError(f"section '{name}' must be an object")
    known = {f.name: f for f in fields(cls) if f.init}
    unknown = set(values) - set(known)
    if unknown:
        raise ValueError(f"unknown keys in section '{name}': {sorted(unknown)}")
    converted = {}
    for key, value in values.items():
        if isinstance(value, list) and not isinstance(known[key].default, (list, dict)):
            value = tuple(value)
        converted[key] = value
    try:
        return cls(**converted)
    except TypeError as e:
        raise ValueError(f"invalid section '{name}': {e}") from e


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(data: dict, overrides: list[str]) -> dict:
    """Apply `section.key=value` (or `key=value` for top-level keys) overrides.

    Values are parsed as JSON, falling back to the raw string.

    Raises:
        ValueError: When an override is malformed.
    """
    data = json.loads(json.dumps(data))
    for item in overrides or []:
        path, sep, text = item.partition("=")
        if not sep or not path:
            raise ValueError(f"override '{item}' must look like section.key=value")
        keys = path.split(".")
        target = data
        for key in keys[:-1]:
            target = target.setdefault(key, {})
            if not isinstance(target, dict):
                raise ValueError(f"override '{item}' does not address a section")
        target[keys[-1]] = _parse_value(text)
    return data


def load_config(fname: str = None, overrides: list[str] = None) -> RunConfig:
    """Read a config file (or the defaults when None) and apply CLI overrides.

    Raises:
        DatasetError: When the file is not valid JSON.
        ValueError: When the document is not a valid configuration.
    """
    data = {}
    if fname:
        data = read_json(fname)
        _logger.debug("read configuration %s", os.path.abspath(fname))
    return RunConfig.from_dict(apply_overrides(data, overrides))


def config_digest(cfg: RunConfig, *sections: str) -> str:
    """SHA-256 of the canonical JSON of the seed and the given sections (all when empty)."""
    doc = cfg.to_dict()
    if sections:
        doc = {"seed": doc["seed"], **{s: doc[s] for s in sections}}
    else:
        doc.pop("output_dir")
    text = json.dumps(doc, sort_keys=True, default=str)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def with_stage_seed(section, cfg: RunConfig, stage: str):
    """A copy of a section dataclass whose `seed` field is the derived stage seed."""
    return replace(section, seed=cfg.stage_seed(stage))


def _fill_defaults(data: dict) -> dict:
    """Propagate the majority modality and the family learning-rate defaults."""
    for name in SECTIONS:
        if not isinstance(data.get(name, {}), dict):
            raise ValueError(f"section '{name}' must be an object")
    data = {**data, **{name: dict(data.get(name, {})) for name in SECTIONS}}

    majority = data["data"].get("majority_modality")
    if majority is not None:
        data["encdec"].setdefault("majority_modality", majority)
        data["trainer"].setdefault("majority_modality", majority)

    defaults = FAMILY_DEFAULTS[to_family(data["synth"].get("family", SynthConfig.family))]
    data["trainer"].setdefault("learning_rate", defaults.learning_rate)
    data["trainer"].setdefault("lr_decay", defaults.lr_decay)
    return data
