"""Uncertainty-minimizing mother wavelets on a log-spaced frequency grid."""

from .catalog import CatalogError, CatalogSpec, catalog_get, parse_spec
from .freqgrid import (
    FreqGrid,
    GridError,
    WaveletFn,
    build_grid,
    derivative,
    inner_product,
    load_wavelet,
    log_warp,
    norm,
    save_wavelet,
    scale_transform,
)
from .minimizer import (
    MinimizeResult,
    MinimizerConfig,
    finite_diff_check,
    gradient,
    minimize,
    project,
)
from .observables import (
    DomainError,
    DomainWarning,
    GroupElement,
    NormalizationError,
    apply_scale,
    apply_time,
    canonical_normalize,
    commutation_check,
    group_action,
    moments,
)
from .phasespace import (
    AmbiguitySurface,
    ambiguity,
    phase_uncertainty_direct,
    wavelet_transform,
)
from .uncertainty import (
    FeasibilityDiagnostics,
    UncertaintyReport,
    admissibility_constant,
    domain_membership,
    feasibility_bounds,
    phase_uncertainty_pullback,
    signal_uncertainty,
)

__all__ = [name for name in dir() if not name.startswith("_")]
