"""Signed-measure simulation models for multipartite quantum scenarios.

The package computes, for finite-dimensional states and finite-outcome
measurement scenarios: explicit setting-dilated source operators and their
trace/covering-norm diagnostics, the exact scenario parameter gamma (minimal
total variation of a reproducing signed measure) by linear programming,
optimal Bell functionals from LP duality, classical bounds by enumeration,
and analytic ceilings on maximal Bell violations.
"""

__version__ = "0.1.0"

from .bounds import BoundReport, state_bound, universal_violation_bound, settings_bound, dimension_bound
from .errors import (
    HermiticityError,
    InputFormatError,
    LqhvError,
    PurityError,
    ShapeMismatchError,
    SizeLimitError,
    TrivialFunctionalError,
)
from .linalg import (
    FactorShape,
    dim_cap,
    eig_hermitian,
    embed_at_slot,
    kron,
    partial_trace,
    trace_norm,
)
from .models import (
    GammaResult,
    SignedMeasure,
    compute_gamma,
    covering_split_measure,
    estimate_upsilon,
    extract_optimal_functional,
    measure_from_source_operator,
)
from .positivity import (
    CoveringBracket,
    PositivityVerdict,
    covering_bracket,
    probe_tensor_positivity,
    reduced_monotonicity_check,
)
from .scenarios import (
    BellFunctional,
    OutcomeSpace,
    Scenario,
    analog_inequality_check,
    chsh_functional,
    correlation_functional,
    joint_distribution,
    lhv_constants,
    pm_outcomes,
    projective_scenario,
    quantum_value,
    violation_ratio,
)
from .source_ops import (
    SourceOperator,
    build_separable_positive,
    build_singlet_special,
    build_tau,
    build_tau_tilde,
    reduce_settings,
    verify_defining_relation,
)
from .states import (
    QuantumState,
    SchmidtForm,
    make_generalized_ghz,
    make_ghz,
    make_separable_mixture,
    make_singlet,
    schmidt,
    state_from_vector,
)

__all__ = [name for name in dir() if not name.startswith("_")]
