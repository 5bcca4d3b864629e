"""Compatibility checks and Frechet-class bounds for trivariate copulas."""

from .bounds import (
    BoundsReport,
    CompatVerdict,
    IncompatibleTripleError,
    Verdict,
    check_pair_compat,
    check_triple_compat,
    cl_cu,
    improvement_report,
    joe_bounds,
    lift_bounds,
    product_bounds,
)
from .copulas import (
    FGM,
    Checkerboard,
    Clayton,
    Copula2,
    InvalidSpecError,
    M,
    Pi,
    Transpose,
    W,
    eval2,
    partial_u1,
    partial_u2,
    spec_from_dict,
    transpose2,
)
from .geometry import (
    Box3,
    GridSpec,
    M3,
    Pi3,
    Rect2,
    concordance_leq2,
    concordance_leq3,
    frechet_envelope_check,
    permute3,
    survival3,
    volume2,
    volume3,
)
from .lifting import (
    FamilyPath,
    LiftedCopula3,
    ProductCopula,
    c_lift,
    c_product,
    lift_concordance_compare,
    marginals_of_lift,
)
from .quadrature import QuadratureConfig, QuadratureError
from .sampler import EmpiricalCopula3, SampleBatch, empirical_vs_analytic, inverse_conditional, sample_family_pair, sample_lift

__version__ = "0.1.0"
