"""Time correlation matrices of unitary evolution observed at random times."""

from ._accel import backend
from .connection import (
    PoleDecomposition,
    TimeStatistics,
    classical_term,
    connection_direct,
    connection_direct_many,
    connection_poles,
    connection_poles_many,
    decompose,
    find_zeros,
    polynomial_roots,
    sensitivities,
    sum_rule_residual,
    time_statistics,
)
from .errors import (
    DegenerateModuli,
    DegenerateRoots,
    LeadingZero,
    MuZero,
    NotConverged,
    PoleHit,
    PoleTooClose,
    PreconditionViolation,
    RetryExhausted,
    TcmError,
    ValidationError,
)
from .genfunc import (
    FixedModulusPolynomial,
    GenFuncCoeffs,
    cj_closed,
    coeff_matrix,
    genfunc_bruteforce,
    genfunc_closed,
    poly_at_fixed_modulus,
)
from .laurent_berry import (
    ContourSpec,
    LaurentSeries,
    PoleClassification,
    berry_phase_full,
    berry_winding,
    c0_analytic,
    c0_residues,
    cauchy_coeff,
    classify_poles,
    isolating_cycle,
    laurent_series,
)
from .scaling import (
    ScalingPoint,
    classical_limit,
    first_order_connection,
    omega_averaged_times,
    scaled_connection,
    small_t_c0,
    small_t_c0_intermediate,
    small_t_poles,
)
from .scenarios import TwoLevelModel, random_model, two_level
from .spectrum import (
    DecayFactors,
    Deterministic,
    Exponential,
    Gamma,
    Spectrum,
    Uniform,
    char_fn,
    decay_factors,
    sample_tau,
)
from .tcm import (
    CorrSequence,
    McEstimate,
    corr_sequence,
    diag_asymptote,
    tcm_element,
    tcm_element_mc,
    tcm_mc_batch,
)

__version__ = "0.1.0"
