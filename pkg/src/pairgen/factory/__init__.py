"""Import the public API methods."""
from .acquisition import (
    AcquisitionGeometry,
    SolverConfig,
    Wavelet,
    check_cfl,
    max_stable_dt,
    ricker,
)
from .forward import Propagation, forward_corpus, pick_arrival, propagate, simulate
from .velocity import (
    FAMILY_DEFAULTS,
    Family,
    LayerModelParams,
    apply_fault,
    family_params,
    gen_corpus,
    gen_curved,
    gen_faulted,
    gen_family,
    gen_flat,
    to_family,
)
