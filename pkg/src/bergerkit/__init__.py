"""Berger measures for transformed subnormal weighted shifts."""
from .scalar import LogPos, as_scalar, set_precision
from .measure import (
    Atom,
    DensityTerm,
    Measure,
    agler_measure,
    density_eval,
    dirac,
    lebesgue,
    measure_moment,
    monomial,
    poly_measure,
    restrict_and_normalize,
    support_set,
    support_square_check,
    term_moment,
)
from .shift import (
    MomentSequence,
    TailRule,
    WeightSequence,
    agler_shift,
    aluthge_transform,
    backstep_extension,
    backstep_shift,
    bergman_shift,
    constant_shift,
    iterated_aluthge,
    moments_from_weights,
    pth_power_shift,
    restriction_shift,
    schur_product,
    weights_from_moments,
)
from .subnormality import (
    complete_monotonicity_scan,
    hankel_matrix,
    is_k_hyponormal,
    is_n_contractive,
)
from .algebra import (
    catalog_measure,
    catalog_sqrt,
    convolve_terms,
    polynomial_square_direct,
    pth_power_lebesgue,
    sqrt_atomic,
    sqrt_geometric,
    square_atomic,
    square_measure,
    transport_from_halfline,
    transport_to_halfline,
)
from .oracle import numeric_convolution, quad_moment, verify_moments, verify_square

__version__ = "0.1.0"
