"""lattice-lab: numerical laboratory for momentum transport in a dissipative
optical lattice - power-law stationary states, generalized-scaling symmetry
diagnostics, and a conservative finite-difference solver."""

__version__ = "0.1.0"

from .model import (
    DerivedParams,
    GaussianLimit,
    LatticeParams,
    Regime,
    RegimeResult,
    classify_regime,
    derive_params,
    derived_to_dict,
    eval_coefficients,
    gaussian_limit,
    normalization_Z,
    params_from_dict,
    second_moment,
    tsallis_density,
)
from .symmetry import (
    AdaptedPoint,
    DecayReport,
    GeneratorSpec,
    JetPoint,
    ProlongedCoeffs,
    ResidualCoeffs,
    adapted_coords,
    asymptotic_scan,
    closed_A,
    closed_a2,
    determining_residual,
    extract_A,
    flow_map,
    from_adapted,
    generator_variation,
    invariance_residual,
    prolong_coeffs,
    stationary_profile,
)
from .fpe_solver import (
    Field,
    Grid,
    Scheme,
    SchemeConfig,
    evolve,
    gaussian_profile,
    init_state,
    l1_distance,
    moments,
    stationarity_residual,
    step,
    tsallis_profile,
)
from .analysis import (
    NormalizableVariation,
    SweepConfig,
    TailClass,
    TailFit,
    VariationReport,
    normalizable_variation,
    sweep,
    tail_exponent,
    variation_integrals,
)
from . import errors

__all__ = [name for name in dir() if not name.startswith("_")]
