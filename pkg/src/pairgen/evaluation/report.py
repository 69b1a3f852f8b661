"""Evaluation report written as JSON."""
from dataclasses import asdict, dataclass, field
import logging
import math

from ..data.container import write_json

_logger = logging.getLogger(__name__)


def _finite(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


@dataclass
class EvaluationReport:
    """Results of the selected evaluation axes.

    Attributes:
        fid (dict[str, float]): FID per modality.
        pairwise (dict): `PairwiseReport.to_dict()` plus the mean-predictor floor.
        physics (dict): mean, median, skipped and count of the physics residuals.
        config (dict): Snapshot of the configuration that produced the numbers.
        inputs (dict): The real and generated dataset paths.
    """

    fid: dict = field(default_factory=dict)
    pairwise: dict = None
    physics: dict = None
    config: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        data = asdict(self)
        if data["physics"]:
            data["physics"] = {k: _finite(v) for k, v in data["physics"].items()}
        return data

    def write(self, fname: str):
        write_json(fname, self.to_dict())
        _logger.info("wrote evaluation report %s", fname)
