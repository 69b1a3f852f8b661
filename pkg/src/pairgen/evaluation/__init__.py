from .fid import (
    ExtractorKind,
    FeatureExtractorSpec,
    GaussianStats,
    RandomConvFeatures,
    eval_fid,
    extract_features,
    fid,
)
from .ssim import gaussian_window, ssim, ssim_maps
from .pairwise import (
    InversionConfig,
    PairwiseReport,
    as_predictor,
    mean_predictor,
    pairwise_eval,
    split_modalities,
    train_inversion_lite,
)
from .physics import PhysicsSummary, physics_aggregate, physics_residual
from .report import EvaluationReport
